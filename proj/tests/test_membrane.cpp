#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "tomoseg/membrane.hpp"

using namespace tomoseg;
using namespace tomoseg::membrane;
namespace ts = testing_support;

namespace {

const std::vector<double> kProfile{0.2, 0.5, 0.9, 0.5, 0.2};

BioParams bio_with(const std::vector<double>& m, int l_m) {
    BioParams b;
    b.r_min = 2;
    b.r_max = l_m / 2;
    b.l_m = l_m;
    b.profile.values = m;
    return b;
}

CropWindow crop_of(const GrayImage& img) { return make_crop(img, {img.width() / 2, img.height() / 2}, img.width() / 2); }

}  // namespace

TEST(EstimateProfile, SingleRayIsTheSampledStep) {
    GrayImage img(10, 3, 0.0);
    for (int x = 5; x < 10; ++x) img.at(x, 1) = 1.0;
    const auto p = estimate_profile(img, {{{2, 1}, {8, 1}}});
    EXPECT_EQ(p.values, (std::vector<double>{0, 0, 0, 1, 1, 1, 1}));
}

TEST(EstimateProfile, IdenticalRaysAverageToEither) {
    auto g = ts::rng(41);
    const auto img = ts::random_image(g, 12, 12);
    const std::pair<Pixel, Pixel> ray{{1, 2}, {10, 7}};
    EXPECT_EQ(estimate_profile(img, {ray, ray}).values, estimate_profile(img, {ray}).values);
}

TEST(EstimateProfile, MixedLengthsResampleToMedian) {
    GrayImage img(12, 2, 0.0);
    const double ridge[] = {0.1, 0.2, 0.4, 0.7, 0.9, 1.0, 0.9, 0.7, 0.4, 0.2, 0.1, 0.0};
    for (int x = 0; x < 12; ++x) {
        img.at(x, 0) = ridge[x];
        img.at(x, 1) = ridge[11 - x];
    }
    const auto p = estimate_profile(img, {{{0, 0}, {8, 0}}, {{0, 1}, {10, 1}}});
    ASSERT_EQ(p.length(), 10u);
    // position j of a length-L ray maps to index round(j*(L-1)/9), halves up
    for (int j = 0; j < 10; ++j) {
        const int a = static_cast<int>(std::floor(j * 8.0 / 9.0 + 0.5));
        const int b = static_cast<int>(std::floor(j * 10.0 / 9.0 + 0.5));
        EXPECT_DOUBLE_EQ(p.values[j], (ridge[a] + ridge[11 - b]) / 2.0) << j;
    }
}

TEST(EstimateProfile, Errors) {
    const GrayImage img(5, 5);
    EXPECT_THROW(estimate_profile(img, {}), ParameterError);
    EXPECT_THROW(estimate_profile(img, {{{0, 0}, {5, 0}}}), ParameterError);
}

TEST(MakeCrop, CentredOddWindowWithPadding) {
    GrayImage img(20, 20, 0.5);
    const auto crop = make_crop(img, {2, 10}, 6);
    EXPECT_EQ(crop.side, 13);
    EXPECT_EQ(crop.seed_local, (Pixel{6, 6}));
    EXPECT_FALSE(crop.is_valid(0, 6));
    EXPECT_TRUE(crop.is_valid(4, 6));
    EXPECT_EQ(crop.image.at(0, 6), 0.0);
}

TEST(BuildCC, StampedProfileScoresOneOnItsRing) {
    const int l_m = 12, d = 7;
    const auto img = ts::chebyshev_stamp(2 * l_m + 1, kProfile, d, 0.3);
    for (auto mode : {CCAssign::Center, CCAssign::Span}) {
        const auto cc = build_cc_image(crop_of(img), bio_with(kProfile, l_m), mode);
        for (int y = 0; y < cc.height; ++y)
            for (int x = 0; x < cc.width; ++x)
                if (std::max(std::abs(x - l_m), std::abs(y - l_m)) == d) EXPECT_NEAR(cc.at(x, y), 1.0, 1e-9);
    }
}

TEST(BuildCC, InvertedStampScoresMinusOneAtCentres) {
    const int l_m = 12, d = 7;
    std::vector<double> inverted;
    for (double v : kProfile) inverted.push_back(1.0 - v);
    const auto img = ts::chebyshev_stamp(2 * l_m + 1, inverted, d, 0.7);
    const auto cc = build_cc_image(crop_of(img), bio_with(kProfile, l_m), CCAssign::Center);
    for (int y = 0; y < cc.height; ++y)
        for (int x = 0; x < cc.width; ++x)
            if (std::max(std::abs(x - l_m), std::abs(y - l_m)) == d) EXPECT_NEAR(cc.at(x, y), -1.0, 1e-9);
}

TEST(BuildCC, ConstantCropScoresZero) {
    const GrayImage img(25, 25, 0.6);
    const auto cc = build_cc_image(crop_of(img), bio_with(kProfile, 12));
    int covered = 0;
    for (double v : cc.values)
        if (v != -1.0) {
            EXPECT_EQ(v, 0.0);
            ++covered;
        }
    EXPECT_GT(covered, 0);
}

TEST(BuildCC, PaddedPixelsStayUncovered) {
    const GrayImage img(30, 30, 0.6);
    const auto crop = make_crop(img, {3, 15}, 10);
    const auto cc = build_cc_image(crop, bio_with(kProfile, 10));
    for (int y = 0; y < crop.side; ++y)
        for (int x = 0; x < crop.side; ++x)
            if (!crop.is_valid(x, y)) EXPECT_EQ(cc.at(x, y), -1.0);
}

TEST(BuildCC, RejectsLongTemplateAndFlatTemplate) {
    const GrayImage img(9, 9, 0.5);
    EXPECT_THROW(build_cc_image(crop_of(img), bio_with(std::vector<double>(6, 0.5), 4)), ParameterError);
    EXPECT_THROW(build_cc_image(crop_of(img), bio_with(std::vector<double>(3, 0.5), 4)), ParameterError);
}

TEST(BuildCC, BoundedAndAffineInvariantProperty) {
    auto g = ts::rng(42);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int l_m = ts::uniform_int(g, 5, 11);
        const int len = ts::uniform_int(g, 3, 5);
        std::vector<double> m(static_cast<std::size_t>(len));
        for (auto& v : m) v = ts::uniform(g, 0.0, 1.0);
        const auto img = ts::random_image(g, 2 * l_m + 1, 2 * l_m + 1);
        const double a = ts::uniform(g, 0.1, 1.0);
        const double b = ts::uniform(g, 0.0, 1.0 - a);
        GrayImage scaled = img;
        for (auto& v : scaled.data()) v = a * v + b;
        const auto bio = bio_with(m, l_m);
        const auto mode = ts::uniform_int(g, 0, 1) ? CCAssign::Center : CCAssign::Span;
        const auto c1 = build_cc_image(crop_of(img), bio, mode);
        const auto c2 = build_cc_image(crop_of(scaled), bio, mode);
        ASSERT_EQ(c1.width, 2 * l_m + 1);
        for (std::size_t i = 0; i < c1.values.size(); ++i) {
            ASSERT_TRUE(c1.values[i] >= -1.0 && c1.values[i] <= 1.0) << "case " << c;
            ASSERT_NEAR(c1.values[i], c2.values[i], 1e-9) << "case " << c;
        }
    }
}

TEST(BuildCC, CoversNearlyWholeCropProperty) {
    auto g = ts::rng(43);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int l_m = ts::uniform_int(g, 10, 16);
        const int len = ts::uniform_int(g, 3, 9);
        std::vector<double> m(static_cast<std::size_t>(len));
        for (auto& v : m) v = ts::uniform(g, 0.0, 1.0);
        const auto img = ts::random_image(g, 2 * l_m + 1, 2 * l_m + 1);
        const auto cc = build_cc_image(crop_of(img), bio_with(m, l_m));
        std::size_t covered = 0;
        for (double v : cc.values) covered += v > -1.0;
        ASSERT_GE(static_cast<double>(covered) / cc.values.size(), 0.99) << "case " << c;
    }
}

#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"
#include "tomoseg/hough.hpp"

using namespace tomoseg;
using namespace tomoseg::seeding;
namespace ts = testing_support;

namespace {

HoughAccumulator random_accumulator(std::mt19937_64& g) {
    HoughAccumulator acc(ts::uniform_int(g, 4, 30), ts::uniform_int(g, 4, 30), 2, ts::uniform_int(g, 2, 4));
    const bool sparse = ts::uniform_int(g, 0, 1) == 1;
    for (int y = 0; y < acc.height(); ++y)
        for (int x = 0; x < acc.width(); ++x)
            for (int r = acc.r_min(); r <= acc.r_max(); ++r)
                // small integer votes make exact ties common
                acc.at(x, y, r) = sparse && ts::uniform_int(g, 0, 4) != 0 ? 0.0 : ts::uniform_int(g, 0, 6);
    return acc;
}

}  // namespace

TEST(HoughAccumulate, ZeroGradientGivesEmptyAccumulator) {
    const GrayImage img(40, 40, 0.4);
    const auto acc = hough_accumulate(img, gradient(img), 8, 12);
    for (double v : acc.votes()) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(detect_seeds(acc, 0.5, 8).empty());
}

TEST(HoughAccumulate, RejectsBadRadiusRange) {
    const GrayImage img(40, 40, 0.4);
    const auto f = gradient(img);
    EXPECT_THROW(hough_accumulate(img, f, 0, 5), ParameterError);
    EXPECT_THROW(hough_accumulate(img, f, 9, 8), ParameterError);
    EXPECT_THROW(hough_accumulate(img, f, 8, 20), ParameterError);
}

TEST(HoughAccumulate, RingPeakAtCentreAndRadius) {
    const auto img = ts::ring_image(64, 64, 32, 32, 10);
    const auto acc = hough_accumulate(img, gradient(img), 8, 12);
    int bx = 0, by = 0, br = 0;
    double best = -1.0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int r = 8; r <= 12; ++r)
                if (acc.at(x, y, r) > best) {
                    best = acc.at(x, y, r);
                    bx = x, by = y, br = r;
                }
    EXPECT_LE(std::abs(bx - 32), 1);
    EXPECT_LE(std::abs(by - 32), 1);
    EXPECT_LE(std::abs(br - 10), 1);
    for (double v : acc.votes()) ASSERT_GE(v, 0.0);
}

TEST(DetectSeeds, OneRingOneSeed) {
    const auto img = ts::ring_image(64, 64, 32, 32, 10);
    const auto seeds = find_seeds(img, SeedParams{8, 12});
    ASSERT_EQ(seeds.size(), 1u);
    EXPECT_LE(std::abs(seeds[0].x - 32), 1);
    EXPECT_LE(std::abs(seeds[0].y - 32), 1);
    EXPECT_LE(std::abs(seeds[0].r_c - 10), 1);
}

TEST(DetectSeeds, TwoRingsTwoSeeds) {
    auto img = ts::ring_image(120, 70, 30, 35, 10);
    const auto other = ts::ring_image(120, 70, 80, 35, 10);
    for (int y = 0; y < 70; ++y)
        for (int x = 0; x < 120; ++x) img.at(x, y) = std::max(img.at(x, y), other.at(x, y));
    SeedParams p{8, 12};
    p.nms_radius = 5;
    auto seeds = find_seeds(img, p);
    ASSERT_EQ(seeds.size(), 2u);
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.x < b.x; });
    EXPECT_LE(std::abs(seeds[0].x - 30), 1);
    EXPECT_LE(std::abs(seeds[1].x - 80), 1);
    EXPECT_LE(std::abs(seeds[0].y - 35), 1);
    EXPECT_LE(std::abs(seeds[1].y - 35), 1);
}

TEST(DetectSeeds, AllZeroAccumulatorIsEmpty) {
    EXPECT_TRUE(detect_seeds(HoughAccumulator(10, 10, 2, 3), 0.5, 2).empty());
}

TEST(DetectSeeds, ValidatesParameters) {
    HoughAccumulator acc(10, 10, 2, 3);
    EXPECT_THROW(detect_seeds(acc, 0.0, 2), ParameterError);
    EXPECT_THROW(detect_seeds(acc, 1.5, 2), ParameterError);
    EXPECT_THROW(detect_seeds(acc, 0.5, -1), ParameterError);
}

TEST(DetectSeeds, ScoresClearThresholdProperty) {
    auto g = ts::rng(31);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const auto acc = random_accumulator(g);
        const double t = ts::uniform(g, 0.05, 1.0);
        const auto seeds = detect_seeds(acc, t, ts::uniform_int(g, 0, 4));
        double top = 0.0;
        for (int y = 0; y < acc.height(); ++y)
            for (int x = 0; x < acc.width(); ++x) top = std::max(top, acc.radial_sum(x, y));
        for (const auto& s : seeds) {
            ASSERT_GE(s.score, t * top) << "case " << c;
            ASSERT_EQ(s.score, acc.radial_sum(s.x, s.y));
            for (int r = acc.r_min(); r <= acc.r_max(); ++r) ASSERT_LE(acc.at(s.x, s.y, r), acc.at(s.x, s.y, s.r_c));
        }
    }
}

TEST(DetectSeeds, SeedsRespectSuppressionRadiusProperty) {
    auto g = ts::rng(32);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const auto acc = random_accumulator(g);
        const int nms = ts::uniform_int(g, 1, 5);
        const auto seeds = detect_seeds(acc, ts::uniform(g, 0.05, 1.0), nms);
        for (std::size_t i = 0; i < seeds.size(); ++i)
            for (std::size_t j = i + 1; j < seeds.size(); ++j) {
                const int dx = seeds[i].x - seeds[j].x;
                const int dy = seeds[i].y - seeds[j].y;
                ASSERT_GT(dx * dx + dy * dy, nms * nms) << "case " << c;
            }
    }
}

TEST(FindSeeds, InvariantUnderConstantOffsetProperty) {
    auto g = ts::rng(33);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        // dyadic intensities keep the offset exact in floating point
        GrayImage img(28, 28);
        for (auto& v : img.data()) v = ts::uniform_int(g, 0, 64) / 256.0;
        const int cx = ts::uniform_int(g, 9, 18), cy = ts::uniform_int(g, 9, 18);
        for (int y = 0; y < 28; ++y)
            for (int x = 0; x < 28; ++x)
                if (std::abs(std::hypot(x - cx, y - cy) - 6.0) < 1.0) img.at(x, y) += 96 / 256.0;
        GrayImage shifted = img;
        const double offset = ts::uniform_int(g, 1, 90) / 256.0;
        for (auto& v : shifted.data()) v += offset;
        SeedParams p{4, 7};
        p.direction = static_cast<VoteDirection>(ts::uniform_int(g, 0, 2));
        ASSERT_EQ(find_seeds(img, p), find_seeds(shifted, p)) << "case " << c;
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "tomoseg/clahe.hpp"

using namespace tomoseg;
using namespace tomoseg::clahe;
namespace ts = testing_support;

namespace {

Histogram random_histogram(std::mt19937_64& g, int bins, int max_count) {
    Histogram h{std::vector<std::int64_t>(static_cast<std::size_t>(bins))};
    const bool spiky = ts::uniform_int(g, 0, 1) == 1;
    for (auto& c : h.counts) c = spiky && ts::uniform_int(g, 0, 3) != 0 ? 0 : ts::uniform_int(g, 0, max_count);
    if (h.total() == 0) h.counts[0] = 1;
    return h;
}

}  // namespace

TEST(PartitionRegions, FiveTwelveIntoSixtyFour) {
    const auto grid = partition_regions(GrayImage(512, 512), ClaheParams{});
    ASSERT_EQ(grid.regions.size(), 64u);
    for (const auto& r : grid.regions) {
        EXPECT_EQ(r.width, 64);
        EXPECT_EQ(r.height, 64);
    }
}

TEST(PartitionRegions, ClassCounts) {
    const auto grid = partition_regions(GrayImage(64, 64), ClaheParams{});
    EXPECT_EQ(grid.count(RegionClass::Corner), 4u);
    EXPECT_EQ(grid.count(RegionClass::Border), 24u);
    EXPECT_EQ(grid.count(RegionClass::Inner), 36u);

    ClaheParams two{2, 2};
    const auto small = partition_regions(GrayImage(10, 10), two);
    EXPECT_EQ(small.regions.size(), 4u);
    EXPECT_EQ(small.count(RegionClass::Corner), 4u);
}

TEST(PartitionRegions, DisjointAndCoveringProperty) {
    auto g = ts::rng(21);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        ClaheParams p;
        p.tiles_x = ts::uniform_int(g, 2, 9);
        p.tiles_y = ts::uniform_int(g, 2, 9);
        const int w = ts::uniform_int(g, p.tiles_x, 70);
        const int h = ts::uniform_int(g, p.tiles_y, 70);
        const auto grid = partition_regions(GrayImage(w, h), p);
        std::vector<int> hits(static_cast<std::size_t>(w) * h, 0);
        for (const auto& r : grid.regions)
            for (int y = r.y0; y < r.y0 + r.height; ++y)
                for (int x = r.x0; x < r.x0 + r.width; ++x) ++hits[static_cast<std::size_t>(y) * w + x];
        for (int v : hits) ASSERT_EQ(v, 1) << "case " << c;
    }
}

TEST(PartitionRegions, RejectsTooSmallImage) {
    EXPECT_THROW(partition_regions(GrayImage(5, 40), ClaheParams{}), DimensionError);
}

TEST(ClipLimit, FormulaValues) {
    EXPECT_EQ(clip_limit(4096, 256, 100.0, 4.0), 64.0);
    EXPECT_EQ(clip_limit(4096, 256, 50.0, 3.0), 32.0);
    EXPECT_EQ(clip_limit(4096, 256, 0.0, 7.0), 16.0);
    EXPECT_EQ(clip_limit(1000, 8, 0.0, 2.0), 125.0);
}

TEST(ClipLimit, AlphaZeroGivesMeanProperty) {
    auto g = ts::rng(22);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int n = ts::uniform_int(g, 2, 512);
        const std::int64_t m = ts::uniform_int(g, 1, 100000);
        const double s = ts::uniform(g, 1.0, 10.0);
        const double beta = clip_limit(m, n, 0.0, s);
        EXPECT_EQ(beta, static_cast<double>(m) / n) << "case " << c;
        EXPECT_GE(clip_limit(m, n, ts::uniform(g, 0.0, 200.0), s), static_cast<double>(m) / n);
    }
}

TEST(ClipLimit, RejectsDegenerateInput) {
    EXPECT_THROW(clip_limit(0, 256, 100, 4), ParameterError);
    EXPECT_THROW(clip_limit(10, 1, 100, 4), ParameterError);
}

TEST(Redistribute, HandSimulatedCases) {
    EXPECT_EQ(redistribute(Histogram{{8, 2, 1, 1}}, 5.0).counts, (std::vector<std::int64_t>{5, 3, 2, 2}));
    EXPECT_EQ(redistribute(Histogram{{12, 0, 0, 0}}, 3.0).counts, (std::vector<std::int64_t>{3, 3, 3, 3}));
    EXPECT_EQ(redistribute(Histogram{{1, 4, 2, 0}}, 4.0).counts, (std::vector<std::int64_t>{1, 4, 2, 0}));
}

TEST(Redistribute, RefusesUnplaceableExcess) {
    EXPECT_THROW(redistribute(Histogram{{10, 0}}, 4.0), ParameterError);
}

TEST(Redistribute, PreservesTotalAndBoundsBinsProperty) {
    auto g = ts::rng(23);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int bins = ts::uniform_int(g, 2, 64);
        const auto h = random_histogram(g, bins, 200);
        const double mean = static_cast<double>(h.total()) / bins;
        const double beta = clip_limit(h.total(), bins, ts::uniform(g, 0.0, 300.0), ts::uniform(g, 1.0, 6.0));
        ASSERT_GE(beta, mean);
        const auto out = redistribute(h, beta);
        ASSERT_EQ(out.total(), h.total()) << "case " << c;
        for (auto v : out.counts) ASSERT_LE(v, static_cast<std::int64_t>(std::ceil(beta))) << "case " << c;
        ASSERT_EQ(out.counts, ts::listing_redistribute(h.counts, beta)) << "case " << c;
    }
}

TEST(Redistribute, MaximallyFlatWhenBinsDivideCountProperty) {
    auto g = ts::rng(24);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int bins = ts::uniform_int(g, 2, 32);
        auto h = random_histogram(g, bins, 50);
        // pad the last bin so the bin count divides the total
        const auto rem = h.total() % bins;
        if (rem != 0) h.counts.back() += bins - rem;
        const double beta = clip_limit(h.total(), bins, 0.0, 1.0);
        const auto out = redistribute(h, beta);
        const double mean = static_cast<double>(h.total()) / bins;
        for (auto v : out.counts) ASSERT_LE(std::abs(static_cast<double>(v) - mean), 1.0) << "case " << c;
    }
}

TEST(TransferFunction, Examples) {
    EXPECT_EQ(transfer_function(Histogram{{1, 1, 1, 1}}, 4), (std::vector<double>{0.75, 1.5, 2.25, 3.0}));
    EXPECT_EQ(transfer_function(Histogram{{7, 0, 0, 0}}, 4), (std::vector<double>{3.0, 3.0, 3.0, 3.0}));
    EXPECT_EQ(transfer_function(Histogram{{5, 3, 2, 2}}, 4), (std::vector<double>{1.25, 2.0, 2.5, 3.0}));
    EXPECT_EQ(transfer_function(Histogram{{0, 0, 0}}, 3), (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(TransferFunction, NonDecreasingAndEndsAtTopProperty) {
    auto g = ts::rng(25);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        const int bins = ts::uniform_int(g, 2, 256);
        const auto h = random_histogram(g, bins, 1000);
        const auto f = transfer_function(h, bins);
        for (int k = 1; k < bins; ++k) ASSERT_LE(f[k - 1], f[k]) << "case " << c;
        ASSERT_EQ(f.back(), static_cast<double>(bins - 1)) << "case " << c;
    }
}

TEST(ApplyClahe, ConstantImageStaysConstant) {
    const auto out = apply_clahe(GrayImage(40, 40, 0.3), ClaheParams{});
    for (double v : out.data()) EXPECT_EQ(v, out.data()[0]);
}

TEST(ApplyClahe, SymmetricPixelsAverageTheTwoMappings) {
    // 8x2 image, 2x2 tiles of 4x1: tile centres at x = 1.5 and 5.5, each row
    // is its own tile row. x = 3 and x = 4 sit at weights 3/8 and 5/8.
    GrayImage img(8, 2, 0.0);
    for (int x = 0; x < 8; ++x) img.at(x, 0) = x < 4 ? 0.1 : 0.9;
    img.at(3, 0) = 0.5;
    img.at(4, 0) = 0.5;
    ClaheParams p{2, 2, 16, 100.0, 4.0};
    const auto model = build_model(img, p);
    const auto out = apply(img, model, p.n_bins);
    const int b = bin_of(0.5, p.n_bins);
    const double left = model.mappings[0][b];
    const double right = model.mappings[1][b];
    EXPECT_NEAR(out.at(3, 0), 0.625 * left + 0.375 * right, 1e-15);
    EXPECT_NEAR(out.at(4, 0), 0.375 * left + 0.625 * right, 1e-15);
    EXPECT_NEAR((out.at(3, 0) + out.at(4, 0)) / 2.0, (left + right) / 2.0, 1e-15);
}

TEST(ApplyClahe, RampRegionsRespectClipBound) {
    GrayImage img(512, 512);
    for (int y = 0; y < 512; ++y)
        for (int x = 0; x < 512; ++x) img.at(x, y) = (x + y) / 1022.0;
    const ClaheParams p;
    const auto model = build_model(img, p);
    ASSERT_EQ(model.clipped.size(), 64u);
    for (std::size_t i = 0; i < model.clipped.size(); ++i) {
        const auto limit = static_cast<std::int64_t>(std::ceil(model.betas[i]));
        for (auto v : model.clipped[i].counts) EXPECT_LE(v, limit);
        EXPECT_EQ(model.clipped[i].total(), 64 * 64);
    }
}

TEST(ApplyClahe, OutputInRangeWithSameShapeProperty) {
    auto g = ts::rng(26);
    for (int c = 0; c < ts::kPropertyCases; ++c) {
        ClaheParams p;
        p.tiles_x = ts::uniform_int(g, 2, 4);
        p.tiles_y = ts::uniform_int(g, 2, 4);
        p.n_bins = ts::uniform_int(g, 2, 64);
        p.alpha = ts::uniform(g, 0.0, 200.0);
        p.s_max = ts::uniform(g, 1.0, 8.0);
        const auto img = ts::random_image(g, ts::uniform_int(g, 4, 24), ts::uniform_int(g, 4, 24));
        const auto out = apply_clahe(img, p);
        ASSERT_EQ(out.width(), img.width());
        ASSERT_EQ(out.height(), img.height());
        for (double v : out.data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0) << "case " << c;
    }
}

TEST(ClaheParams, Validation) {
    EXPECT_THROW((ClaheParams{1, 8}.validate()), ParameterError);
    EXPECT_THROW((ClaheParams{8, 8, 1}.validate()), ParameterError);
    EXPECT_THROW((ClaheParams{8, 8, 256, -1.0}.validate()), ParameterError);
    EXPECT_THROW((ClaheParams{8, 8, 256, 100.0, 0.5}.validate()), ParameterError);
}

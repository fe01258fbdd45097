#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"

namespace tomoseg::clahe {

struct ClaheParams {
    int tiles_x = 8;
    int tiles_y = 8;
    int n_bins = 256;
    double alpha = 100.0;  // clip factor, percent
    double s_max = 4.0;    // maximum slope of the transfer function

    void validate() const {
        if (tiles_x < 2 || tiles_y < 2) throw ParameterError("clahe: need at least 2x2 tiles");
        if (n_bins < 2) throw ParameterError("clahe: need at least 2 bins");
        if (!(alpha >= 0.0)) throw ParameterError("clahe: alpha must be >= 0");
        if (!(s_max >= 1.0)) throw ParameterError("clahe: s_max must be >= 1");
    }
};

/// Corner, border and inner tiles.
enum class RegionClass { Corner, Border, Inner };

struct Region {
    int tile_x = 0;
    int tile_y = 0;
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
    RegionClass cls = RegionClass::Inner;

    double center_x() const { return x0 + (width - 1) / 2.0; }
    double center_y() const { return y0 + (height - 1) / 2.0; }
};

struct RegionGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<Region> regions;  // row-major over tiles

    const Region& at(int tx, int ty) const { return regions[static_cast<std::size_t>(ty) * tiles_x + tx]; }

    std::size_t count(RegionClass c) const {
        return static_cast<std::size_t>(
            std::count_if(regions.begin(), regions.end(), [c](const Region& r) { return r.cls == c; }));
    }
};

struct Histogram {
    std::vector<std::int64_t> counts;

    std::int64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }
    int bins() const { return static_cast<int>(counts.size()); }
};

namespace detail {

// Tile boundaries along one axis; the last tile absorbs the remainder.
inline std::vector<int> tile_starts(int extent, int tiles) {
    const int base = extent / tiles;
    std::vector<int> starts(static_cast<std::size_t>(tiles) + 1);
    for (int i = 0; i < tiles; ++i) starts[i] = i * base;
    starts[tiles] = extent;
    return starts;
}

}  // namespace detail

inline RegionGrid partition_regions(const GrayImage& img, const ClaheParams& params) {
    params.validate();
    if (img.width() < params.tiles_x || img.height() < params.tiles_y)
        throw DimensionError("partition_regions: image smaller than tile grid");
    const auto xs = detail::tile_starts(img.width(), params.tiles_x);
    const auto ys = detail::tile_starts(img.height(), params.tiles_y);

    RegionGrid grid{params.tiles_x, params.tiles_y, {}};
    grid.regions.reserve(static_cast<std::size_t>(params.tiles_x) * params.tiles_y);
    for (int ty = 0; ty < params.tiles_y; ++ty) {
        for (int tx = 0; tx < params.tiles_x; ++tx) {
            const bool edge_x = tx == 0 || tx == params.tiles_x - 1;
            const bool edge_y = ty == 0 || ty == params.tiles_y - 1;
            const RegionClass cls = edge_x && edge_y ? RegionClass::Corner
                                    : edge_x || edge_y ? RegionClass::Border
                                                       : RegionClass::Inner;
            grid.regions.push_back(Region{tx, ty, xs[tx], ys[ty], xs[tx + 1] - xs[tx], ys[ty + 1] - ys[ty], cls});
        }
    }
    return grid;
}

/// Clip limit beta = (M/N)(1 + alpha/100 (s_max - 1)), raised to ceil(M/N)
/// whenever beta*N < M so redistribution can always place the excess.
inline double clip_limit(std::int64_t pixel_count, int n_bins, double alpha, double s_max) {
    if (pixel_count < 1 || n_bins < 2)
        throw ParameterError("clip_limit: need M >= 1 and N >= 2");
    const double mean = static_cast<double>(pixel_count) / n_bins;
    double beta = mean * (1.0 + (alpha / 100.0) * (s_max - 1.0));
    if (beta < mean)
        beta = std::ceil(mean);
    return beta;
}

/// Iterative histogram redistribution: clip at the limit, spread
/// floor(excess/N) uniformly, then hand out the remainder one count at a
/// time round-robin. Counts are integral, so the working limit is ceil(beta).
inline Histogram redistribute(Histogram h, double beta) {
    const auto n = static_cast<std::int64_t>(h.counts.size());
    if (n < 1) return h;
    const std::int64_t limit = static_cast<std::int64_t>(std::ceil(beta));
    if (static_cast<double>(limit) * n < static_cast<double>(h.total()))
        throw ParameterError("redistribute: beta*N < M, excess could never be placed");

    std::int64_t excess = 0;
    for (auto& c : h.counts) {
        if (c > limit) {
            excess += c - limit;
            c = limit;
        }
    }

    const std::int64_t m = excess / n;
    for (auto& c : h.counts) {
        if (c < limit - m) {
            c += m;
            excess -= m;
        } else if (c < limit) {
            excess -= limit - c;
            c = limit;
        }
    }

    while (excess > 0) {
        for (auto& c : h.counts) {
            if (excess > 0 && c < limit) {
                ++c;
                --excess;
            }
        }
    }
    return h;
}

/// Scaled CDF f(n) = (N-1)/M * sum_{k<=n} h(k). An empty histogram maps through identity.
inline std::vector<double> transfer_function(const Histogram& h, int n_bins) {
    if (h.bins() != n_bins) throw ParameterError("transfer_function: histogram has wrong bin count");
    std::vector<double> f(static_cast<std::size_t>(n_bins));
    const std::int64_t total = h.total();
    if (total == 0) {
        std::iota(f.begin(), f.end(), 0.0);
        return f;
    }
    std::int64_t cum = 0;
    for (int k = 0; k < n_bins; ++k) {
        cum += h.counts[k];
        f[k] = static_cast<double>(n_bins - 1) * static_cast<double>(cum) / static_cast<double>(total);
    }
    return f;
}

inline int bin_of(double v, int n_bins) {
    const int b = static_cast<int>(v * n_bins);
    return std::clamp(b, 0, n_bins - 1);
}

inline Histogram region_histogram(const GrayImage& img, const Region& r, int n_bins) {
    Histogram h{std::vector<std::int64_t>(static_cast<std::size_t>(n_bins), 0)};
    for (int y = r.y0; y < r.y0 + r.height; ++y)
        for (int x = r.x0; x < r.x0 + r.width; ++x) ++h.counts[bin_of(img.at(x, y), n_bins)];
    return h;
}

/// Per-region state: clipped histograms and their transfer functions.
struct ClaheModel {
    RegionGrid grid;
    std::vector<double> betas;
    std::vector<Histogram> clipped;
    std::vector<std::vector<double>> mappings;  // normalized to [0,1]
};

inline ClaheModel build_model(const GrayImage& img, const ClaheParams& params) {
    ClaheModel model;
    model.grid = partition_regions(img, params);
    const std::size_t count = model.grid.regions.size();
    model.betas.resize(count);
    model.clipped.resize(count);
    model.mappings.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Region& r = model.grid.regions[i];
        const auto h = region_histogram(img, r, params.n_bins);
        const std::int64_t m = h.total();
        if (m == 0) {
            model.clipped[i] = h;
            model.betas[i] = 0.0;
        } else {
            model.betas[i] = clip_limit(m, params.n_bins, params.alpha, params.s_max);
            model.clipped[i] = redistribute(h, model.betas[i]);
        }
        auto f = transfer_function(model.clipped[i], params.n_bins);
        for (auto& v : f) v /= (params.n_bins - 1);
        model.mappings[i] = std::move(f);
    }
    return model;
}

namespace detail {

// Interpolation anchors along one axis: the pair of neighboring tile
// centers around `pos` and the weight of the second one. Positions outside
// the outermost centers clamp to a single tile.
struct Anchor {
    int lo = 0;
    int hi = 0;
    double t = 0.0;
};

inline Anchor anchor(double pos, const std::vector<double>& centers) {
    const int n = static_cast<int>(centers.size());
    if (pos <= centers.front()) return {0, 0, 0.0};
    if (pos >= centers.back()) return {n - 1, n - 1, 0.0};
    int lo = static_cast<int>(std::upper_bound(centers.begin(), centers.end(), pos) - centers.begin()) - 1;
    lo = std::clamp(lo, 0, n - 2);
    const double t = (pos - centers[lo]) / (centers[lo + 1] - centers[lo]);
    return {lo, lo + 1, t};
}

}  // namespace detail

/// Bilinear blend of the (up to four) nearest tile mappings around each pixel.
inline GrayImage apply(const GrayImage& img, const ClaheModel& model, int n_bins) {
    const auto& grid = model.grid;
    std::vector<double> cx(static_cast<std::size_t>(grid.tiles_x));
    std::vector<double> cy(static_cast<std::size_t>(grid.tiles_y));
    for (int tx = 0; tx < grid.tiles_x; ++tx) cx[tx] = grid.at(tx, 0).center_x();
    for (int ty = 0; ty < grid.tiles_y; ++ty) cy[ty] = grid.at(0, ty).center_y();

    auto mapping = [&](int tx, int ty) -> const std::vector<double>& {
        return model.mappings[static_cast<std::size_t>(ty) * grid.tiles_x + tx];
    };

    GrayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        const auto ay = detail::anchor(y, cy);
        for (int x = 0; x < img.width(); ++x) {
            const auto ax = detail::anchor(x, cx);
            const int b = bin_of(img.at(x, y), n_bins);
            const double top = (1.0 - ax.t) * mapping(ax.lo, ay.lo)[b] + ax.t * mapping(ax.hi, ay.lo)[b];
            const double bottom = (1.0 - ax.t) * mapping(ax.lo, ay.hi)[b] + ax.t * mapping(ax.hi, ay.hi)[b];
            out.at(x, y) = std::clamp((1.0 - ay.t) * top + ay.t * bottom, 0.0, 1.0);
        }
    }
    return out;
}

inline GrayImage apply_clahe(const GrayImage& img, const ClaheParams& params) {
    return apply(img, build_model(img, params), params.n_bins);
}

}  // namespace tomoseg::clahe

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"
#include "tomoseg/membrane.hpp"

namespace tomoseg::assembly {

/// One row of the per-slice information matrix.
struct CellRecord {
    int slice_idx = 0;
    int cell_idx = 0;
    double cx = 0.0;
    double cy = 0.0;
    int area = 0;
    int perimeter = 0;
    std::vector<Pixel> mask;
};

/// Segmented cell before it receives an index.
struct Candidate {
    std::vector<Pixel> mask;  // sorted by (y, x), unique
    double boundary_cc = 0.0;
};

struct AssemblyParams {
    double cc_min = 0.2;
    double jaccard = 0.8;
};

struct LabeledSlice {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> labels;  // 0 background, k = cell_idx
    std::vector<CellRecord> records;    // records[k-1].cell_idx == k
};

inline bool raster_less(const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

/// Centroid, area and 4-neighbour perimeter of a mask.
inline CellRecord make_record(std::vector<Pixel> mask, int slice_idx, int cell_idx) {
    if (mask.empty()) throw ParameterError("make_record: empty mask");
    std::sort(mask.begin(), mask.end(), raster_less);
    mask.erase(std::unique(mask.begin(), mask.end()), mask.end());
    CellRecord r;
    r.slice_idx = slice_idx;
    r.cell_idx = cell_idx;
    r.area = static_cast<int>(mask.size());
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : mask) {
        sx += p.x;
        sy += p.y;
    }
    r.cx = sx / r.area;
    r.cy = sy / r.area;
    auto inside = [&](int x, int y) { return std::binary_search(mask.begin(), mask.end(), Pixel{x, y}, raster_less); };
    for (const auto& p : mask)
        if (!inside(p.x + 1, p.y) || !inside(p.x - 1, p.y) || !inside(p.x, p.y + 1) || !inside(p.x, p.y - 1))
            ++r.perimeter;
    r.mask = std::move(mask);
    return r;
}

/// Keeps candidates with area in [pi r_min^2 / 2, 2 pi r_max^2] and mean
/// boundary CC >= cc_min. Order is preserved.
inline std::vector<Candidate> reject_outliers(const std::vector<Candidate>& cells, const membrane::BioParams& bio,
                                              double cc_min = 0.2) {
    const double lo = std::numbers::pi * bio.r_min * bio.r_min / 2.0;
    const double hi = 2.0 * std::numbers::pi * bio.r_max * bio.r_max;
    std::vector<Candidate> kept;
    for (const auto& c : cells) {
        const auto area = static_cast<double>(c.mask.size());
        if (area >= lo && area <= hi && c.boundary_cc >= cc_min) kept.push_back(c);
    }
    return kept;
}

inline std::size_t intersection_size(const std::vector<Pixel>& a, const std::vector<Pixel>& b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (raster_less(*i, *j)) ++i;
        else if (raster_less(*j, *i)) ++j;
        else { ++n; ++i; ++j; }
    }
    return n;
}

inline double jaccard(const std::vector<Pixel>& a, const std::vector<Pixel>& b) {
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace detail {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    // smaller root wins so group order follows first member
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace detail

/// Fuses candidates whose masks overlap with Jaccard >= threshold, closing
/// transitively and repeating until no pair qualifies. Merged cells keep the
/// position of their first member and the best boundary CC.
inline std::vector<Candidate> merge_duplicates(std::vector<Candidate> cells, double threshold = 0.8) {
    for (auto& c : cells) {
        std::sort(c.mask.begin(), c.mask.end(), raster_less);
        c.mask.erase(std::unique(c.mask.begin(), c.mask.end()), c.mask.end());
    }
    for (;;) {
        detail::DisjointSets sets(cells.size());
        bool merged = false;
        for (std::size_t i = 0; i < cells.size(); ++i)
            for (std::size_t j = i + 1; j < cells.size(); ++j)
                if (jaccard(cells[i].mask, cells[j].mask) >= threshold) {
                    sets.unite(i, j);
                    merged = true;
                }
        if (!merged) return cells;

        std::vector<Candidate> next;
        std::vector<std::size_t> slot(cells.size(), std::numeric_limits<std::size_t>::max());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::size_t root = sets.find(i);
            if (slot[root] == std::numeric_limits<std::size_t>::max()) {
                slot[root] = next.size();
                next.push_back(cells[i]);
                continue;
            }
            Candidate& into = next[slot[root]];
            std::vector<Pixel> uni;
            std::set_union(into.mask.begin(), into.mask.end(), cells[i].mask.begin(), cells[i].mask.end(),
                           std::back_inserter(uni), raster_less);
            into.mask = std::move(uni);
            into.boundary_cc = std::max(into.boundary_cc, cells[i].boundary_cc);
        }
        cells = std::move(next);
    }
}

/// Assigns every contested pixel to the cell with the nearest centroid (lower
/// index on ties), drops cells left empty and recomputes records.
inline LabeledSlice resolve_overlaps(const std::vector<std::vector<Pixel>>& masks, int width, int height,
                                     int slice_idx = 0) {
    LabeledSlice out;
    out.width = width;
    out.height = height;
    out.labels.assign(static_cast<std::size_t>(width) * height, 0);

    std::vector<double> cx(masks.size());
    std::vector<double> cy(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        double sx = 0.0;
        double sy = 0.0;
        for (const auto& p : masks[k]) {
            sx += p.x;
            sy += p.y;
        }
        const double n = masks[k].empty() ? 1.0 : static_cast<double>(masks[k].size());
        cx[k] = sx / n;
        cy[k] = sy / n;
    }

    // provisional owner per pixel: index+1 into masks
    std::vector<std::uint32_t> owner(out.labels.size(), 0);
    for (std::size_t k = 0; k < masks.size(); ++k) {
        for (const auto& p : masks[k]) {
            if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) continue;
            auto& o = owner[static_cast<std::size_t>(p.y) * width + p.x];
            if (o == 0) {
                o = static_cast<std::uint32_t>(k + 1);
                continue;
            }
            const std::size_t cur = o - 1;
            const double d_cur = std::hypot(p.x - cx[cur], p.y - cy[cur]);
            const double d_new = std::hypot(p.x - cx[k], p.y - cy[k]);
            if (d_new < d_cur || (d_new == d_cur && k < cur)) o = static_cast<std::uint32_t>(k + 1);
        }
    }

    std::vector<std::vector<Pixel>> owned(masks.size());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const auto o = owner[static_cast<std::size_t>(y) * width + x];
            if (o != 0) owned[o - 1].push_back({x, y});
        }

    for (auto& mask : owned) {
        if (mask.empty()) continue;
        const int idx = static_cast<int>(out.records.size()) + 1;
        if (idx > 65535) throw ParameterError("resolve_overlaps: more than 65535 cells in one slice");
        for (const auto& p : mask) out.labels[static_cast<std::size_t>(p.y) * width + p.x] = static_cast<std::uint16_t>(idx);
        out.records.push_back(make_record(std::move(mask), slice_idx, idx));
    }
    return out;
}

/// Full per-slice assembly: reject, merge, resolve.
inline LabeledSlice assemble(const std::vector<Candidate>& candidates, const membrane::BioParams& bio, int width,
                             int height, int slice_idx, const AssemblyParams& params = {}) {
    const auto kept = merge_duplicates(reject_outliers(candidates, bio, params.cc_min), params.jaccard);
    std::vector<std::vector<Pixel>> masks;
    masks.reserve(kept.size());
    for (const auto& c : kept) masks.push_back(c.mask);
    return resolve_overlaps(masks, width, height, slice_idx);
}

}  // namespace tomoseg::assembly

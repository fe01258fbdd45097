#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/hough.hpp"
#include "tomoseg/image.hpp"
#include "tomoseg/maxflow.hpp"
#include "tomoseg/membrane.hpp"

namespace tomoseg::graphcut {

/// `Literal` reads the conductance as exp(-10^CC); `Linear` as exp(-10*CC).
enum class ConductanceMode { Literal, Linear };

inline double conductance(double cc, ConductanceMode mode = ConductanceMode::Literal) {
    return mode == ConductanceMode::Literal ? std::exp(-std::pow(10.0, cc)) : std::exp(-10.0 * cc);
}

/// Symmetric 2x2 tensor [[xx, xy], [xy, yy]].
struct MetricTensor {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    double det() const { return xx * yy - xy * xy; }
    double quadratic(double ex, double ey) const { return xx * ex * ex + 2.0 * xy * ex * ey + yy * ey * ey; }
};

/// D = g*I + (1-g)*u*u^T; a zero direction gives the identity.
inline MetricTensor metric_tensor(double g, double ux, double uy) {
    if (ux == 0.0 && uy == 0.0) return {};
    return {g + (1.0 - g) * ux * ux, (1.0 - g) * ux * uy, g + (1.0 - g) * uy * uy};
}

inline constexpr double kDefaultWMax = 1e6;
inline constexpr double kGridSpacing = 1.0;                      // delta
inline constexpr double kAngularStep = std::numbers::pi / 4.0;  // delta phi, 8-neighbourhood

/// Riemannian cut weight for the grid vector e under metric D:
/// delta^2 |e|^2 dphi det(D) / (2 (e^T D e)^{3/2}).
inline double edge_weight(double ex, double ey, const MetricTensor& d, double delta = kGridSpacing,
                          double dphi = kAngularStep, double w_max = kDefaultWMax) {
    const double q = d.quadratic(ex, ey);
    if (q <= 1e-12) return w_max;
    const double w = delta * delta * (ex * ex + ey * ey) * dphi * d.det() / (2.0 * std::pow(q, 1.5));
    return std::max(w, 0.0);
}

/// 8-neighbour offsets, indexed by direction.
inline constexpr std::array<Pixel, 8> kNeighbors{{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

/// Direction index of -kNeighbors[d].
inline constexpr int opposite(int d) { return (d + 4) % 8; }

/// Directed 8-neighbour grid graph with terminal constraints.
struct PixelGraph {
    int width = 0;
    int height = 0;
    std::vector<double> weights;        // [pixel * 8 + dir]; 0 where the neighbour is outside
    std::vector<std::uint8_t> has_edge; // [pixel * 8 + dir]
    std::vector<std::uint8_t> source;   // C: forced cell
    std::vector<std::uint8_t> sink;     // B: forced background
    double w_max = kDefaultWMax;

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

    int out_degree(int x, int y) const {
        int n = 0;
        for (int d = 0; d < 8; ++d) n += has_edge[index(x, y) * 8 + d];
        return n;
    }

    double weight(int x, int y, int dir) const { return weights[index(x, y) * 8 + dir]; }
};

struct BinaryLabeling {
    std::vector<std::uint8_t> cell;  // 1 = cell, 0 = background
    double energy = 0.0;
};

/// Graph skeleton: edges to every in-bounds 8-neighbour with zero weight,
/// C = N(seed, r_c/2), B = frame pixels.
inline PixelGraph make_grid(int width, int height, Pixel seed, double source_radius, double w_max = kDefaultWMax) {
    if (width < 1 || height < 1) throw DimensionError("make_grid: empty grid");
    PixelGraph g;
    g.width = width;
    g.height = height;
    g.w_max = w_max;
    g.weights.assign(g.pixels() * 8, 0.0);
    g.has_edge.assign(g.pixels() * 8, 0);
    g.source.assign(g.pixels(), 0);
    g.sink.assign(g.pixels(), 0);
    const double r2 = source_radius * source_radius;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const auto i = g.index(x, y);
            int neighbors = 0;
            for (int d = 0; d < 8; ++d) {
                const int qx = x + kNeighbors[d].x;
                const int qy = y + kNeighbors[d].y;
                if (qx >= 0 && qy >= 0 && qx < width && qy < height) {
                    g.has_edge[i * 8 + d] = 1;
                    ++neighbors;
                }
            }
            g.sink[i] = neighbors < 8;
            const double dx = x - seed.x;
            const double dy = y - seed.y;
            g.source[i] = dx * dx + dy * dy <= r2;
            if (g.source[i] && g.sink[i])
                throw ConstraintViolation("build_graph: source disk touches the crop frame");
        }
    return g;
}

/// Weights every directed edge (p, q) with the metric at its tail p.
inline PixelGraph build_graph(const membrane::CCImage& cc, const VectorField& field, const seeding::Seed& seed,
                              ConductanceMode mode = ConductanceMode::Literal, double w_max = kDefaultWMax) {
    if (field.width != cc.width || field.height != cc.height)
        throw DimensionError("build_graph: gradient field and CC image differ in size");
    if (seed.r_c < 2) throw ParameterError("build_graph: r_c/2 must be >= 1");
    PixelGraph g = make_grid(cc.width, cc.height, Pixel{seed.x, seed.y}, seed.r_c / 2.0, w_max);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const auto i = g.index(x, y);
            const double dx = field.dx[i];
            const double dy = field.dy[i];
            const double mag = std::hypot(dx, dy);
            const double ux = mag > 0.0 ? dx / mag : 0.0;
            const double uy = mag > 0.0 ? dy / mag : 0.0;
            const MetricTensor d = metric_tensor(conductance(cc.at(x, y), mode), ux, uy);
            for (int dir = 0; dir < 8; ++dir)
                if (g.has_edge[i * 8 + dir])
                    g.weights[i * 8 + dir] =
                        edge_weight(kNeighbors[dir].x, kNeighbors[dir].y, d, kGridSpacing, kAngularStep, w_max);
        }
    return g;
}

/// EN(A): sum of w(p,q) over directed edges whose endpoints are labelled differently.
inline double energy(const PixelGraph& g, const std::vector<std::uint8_t>& cell) {
    double e = 0.0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const auto i = g.index(x, y);
            for (int d = 0; d < 8; ++d) {
                if (!g.has_edge[i * 8 + d]) continue;
                const auto j = g.index(x + kNeighbors[d].x, y + kNeighbors[d].y);
                if (cell[i] != cell[j]) e += g.weights[i * 8 + d];
            }
        }
    return e;
}

/// Globally minimal labeling with C forced to cell and B to background.
///
/// Both directed edges of a pixel pair are cut together, so each pair becomes
/// one undirected capacity w(p,q) + w(q,p) and the cut value equals EN(A).
inline BinaryLabeling min_cut(const PixelGraph& g) {
    const int n = static_cast<int>(g.pixels());
    const int s = n;
    const int t = n + 1;

    double max_link = 0.0;
    for (double w : g.weights) max_link = std::max(max_link, w);
    MaxFlow<double> flow(n + 2, 1e-13 * std::max(max_link, 1e-300));

    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const auto i = g.index(x, y);
            // dirs 0..3 cover each unordered pair once
            for (int d = 0; d < 4; ++d) {
                if (!g.has_edge[i * 8 + d]) continue;
                const auto j = g.index(x + kNeighbors[d].x, y + kNeighbors[d].y);
                const double c = g.weights[i * 8 + d] + g.weights[j * 8 + opposite(d)];
                if (c > 0.0) flow.add_edge(static_cast<int>(i), static_cast<int>(j), c, c);
            }
            if (g.source[i]) flow.add_edge(s, static_cast<int>(i), g.w_max);
            if (g.sink[i]) flow.add_edge(static_cast<int>(i), t, g.w_max);
        }
    flow.solve(s, t);

    BinaryLabeling out;
    out.cell.resize(g.pixels());
    for (int v = 0; v < n; ++v) out.cell[v] = flow.source_side(v) ? 1 : 0;
    out.energy = energy(g, out.cell);
    return out;
}

struct GraphCutParams {
    ConductanceMode g_mode = ConductanceMode::Literal;
    double w_max = kDefaultWMax;
    membrane::CCAssign cc_assign = membrane::CCAssign::Center;
};

/// One seed's segmentation, in parent-slice coordinates.
struct SeedSegmentation {
    seeding::Seed seed;
    std::vector<Pixel> mask;  // sorted, inside the parent slice
    double boundary_cc = 0.0; // mean CC over mask pixels with a non-mask 4-neighbour
    double energy = 0.0;
};

namespace detail {

inline VectorField crop_field(const VectorField& field, const membrane::CropWindow& crop) {
    VectorField out(crop.side, crop.side);
    for (int y = 0; y < crop.side; ++y)
        for (int x = 0; x < crop.side; ++x) {
            const Pixel p = crop.to_parent({x, y});
            if (p.x < 0 || p.y < 0 || p.x >= field.width || p.y >= field.height) continue;
            const auto src = field.index(p.x, p.y);
            const auto dst = out.index(x, y);
            out.dx[dst] = field.dx[src];
            out.dy[dst] = field.dy[src];
        }
    return out;
}

// 8-connected component of `cell` containing `start`.
inline std::vector<std::uint8_t> component(const std::vector<std::uint8_t>& cell, int side, Pixel start) {
    std::vector<std::uint8_t> keep(cell.size(), 0);
    const auto s = static_cast<std::size_t>(start.y) * side + start.x;
    if (!cell[s]) return keep;
    std::vector<Pixel> stack{start};
    keep[s] = 1;
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        for (const Pixel& o : kNeighbors) {
            const int qx = p.x + o.x;
            const int qy = p.y + o.y;
            if (qx < 0 || qy < 0 || qx >= side || qy >= side) continue;
            const auto q = static_cast<std::size_t>(qy) * side + qx;
            if (cell[q] && !keep[q]) {
                keep[q] = 1;
                stack.push_back({qx, qy});
            }
        }
    }
    return keep;
}

}  // namespace detail

/// CC image -> conductance -> metric -> graph -> min cut for one seed.
/// `field` is the gradient of the full slice.
inline SeedSegmentation segment_seed(const GrayImage& slice, const VectorField& field, const seeding::Seed& seed,
                                     const membrane::BioParams& bio, const GraphCutParams& params = {}) {
    const auto crop = membrane::make_crop(slice, {seed.x, seed.y}, bio.l_m);
    const auto cc = membrane::build_cc_image(crop, bio, params.cc_assign);
    const auto local_field = detail::crop_field(field, crop);
    const seeding::Seed local{crop.seed_local.x, crop.seed_local.y, seed.r_c, seed.score};
    const auto graph = build_graph(cc, local_field, local, params.g_mode, params.w_max);
    const auto labels = min_cut(graph);
    const auto keep = detail::component(labels.cell, crop.side, crop.seed_local);

    SeedSegmentation out;
    out.seed = seed;
    out.energy = labels.energy;
    double cc_sum = 0.0;
    int boundary = 0;
    for (int y = 0; y < crop.side; ++y)
        for (int x = 0; x < crop.side; ++x) {
            const auto i = static_cast<std::size_t>(y) * crop.side + x;
            if (!keep[i] || !crop.is_valid(x, y)) continue;
            out.mask.push_back(crop.to_parent({x, y}));
            bool edge = false;
            for (int d = 0; d < 8; d += 2) {
                const int qx = x + kNeighbors[d].x;
                const int qy = y + kNeighbors[d].y;
                if (qx < 0 || qy < 0 || qx >= crop.side || qy >= crop.side ||
                    !keep[static_cast<std::size_t>(qy) * crop.side + qx] || !crop.is_valid(qx, qy)) {
                    edge = true;
                    break;
                }
            }
            if (edge) {
                cc_sum += cc.at(x, y);
                ++boundary;
            }
        }
    out.boundary_cc = boundary > 0 ? cc_sum / boundary : -1.0;
    std::sort(out.mask.begin(), out.mask.end(),
              [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    return out;
}

}  // namespace tomoseg::graphcut

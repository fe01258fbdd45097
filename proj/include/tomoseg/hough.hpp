#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"

namespace tomoseg::seeding {

/// Side of the gradient a pixel votes on.
enum class VoteDirection { Plus, Minus, Both };

/// Votes indexed by (x, y, r) with r in [r_min, r_max].
class HoughAccumulator {
public:
    HoughAccumulator() = default;
    HoughAccumulator(int width, int height, int r_min, int r_max)
        : width_(width), height_(height), r_min_(r_min), r_max_(r_max),
          votes_(static_cast<std::size_t>(width) * height * (r_max - r_min + 1), 0.0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int r_min() const { return r_min_; }
    int r_max() const { return r_max_; }
    int radii() const { return r_max_ - r_min_ + 1; }

    double& at(int x, int y, int r) { return votes_[index(x, y, r)]; }
    double at(int x, int y, int r) const { return votes_[index(x, y, r)]; }

    /// Sum of votes over all radii at (x, y).
    double radial_sum(int x, int y) const {
        double s = 0.0;
        for (int r = r_min_; r <= r_max_; ++r) s += at(x, y, r);
        return s;
    }

    const std::vector<double>& votes() const { return votes_; }

private:
    std::size_t index(int x, int y, int r) const {
        return (static_cast<std::size_t>(y) * width_ + x) * radii() + (r - r_min_);
    }

    int width_ = 0;
    int height_ = 0;
    int r_min_ = 0;
    int r_max_ = 0;
    std::vector<double> votes_;
};

struct Seed {
    int x = 0;
    int y = 0;
    int r_c = 0;
    double score = 0.0;

    friend bool operator==(const Seed&, const Seed&) = default;
};

struct SeedParams {
    int r_min = 8;
    int r_max = 12;
    double rel_threshold = 0.5;
    int nms_radius = 0;  // 0 selects r_min
    double noise_floor = 0.01;
    VoteDirection direction = VoteDirection::Both;
};

/// Each pixel with |grad| >= noise_floor deposits |grad| at p +/- r*u(p) for
/// every integer r in [r_min, r_max]; votes landing outside the image are dropped.
inline HoughAccumulator hough_accumulate(const GrayImage& img, const VectorField& field, int r_min, int r_max,
                                         VoteDirection direction = VoteDirection::Both,
                                         double noise_floor = 0.01) {
    if (field.width != img.width() || field.height != img.height())
        throw DimensionError("hough_accumulate: field does not match image");
    if (r_min < 1 || r_max < r_min || 2 * r_max >= std::min(img.width(), img.height()))
        throw ParameterError("hough_accumulate: need 1 <= r_min <= r_max < min(w,h)/2");

    HoughAccumulator acc(img.width(), img.height(), r_min, r_max);
    const bool plus = direction != VoteDirection::Minus;
    const bool minus = direction != VoteDirection::Plus;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto i = field.index(x, y);
            const double mag = std::hypot(field.dx[i], field.dy[i]);
            if (mag < noise_floor || mag == 0.0) continue;
            const double ux = field.dx[i] / mag;
            const double uy = field.dy[i] / mag;
            for (int r = r_min; r <= r_max; ++r) {
                const long ox = std::lround(r * ux);
                const long oy = std::lround(r * uy);
                if (plus) {
                    const int vx = x + static_cast<int>(ox);
                    const int vy = y + static_cast<int>(oy);
                    if (img.contains(vx, vy)) acc.at(vx, vy, r) += mag;
                }
                if (minus) {
                    const int vx = x - static_cast<int>(ox);
                    const int vy = y - static_cast<int>(oy);
                    if (img.contains(vx, vy)) acc.at(vx, vy, r) += mag;
                }
            }
        }
    }
    return acc;
}

/// Local maxima of the radially summed votes above rel_threshold * global max,
/// suppressed within a disk of nms_radius. Equal sums are ordered by raster
/// position so results are deterministic. Output sorted by descending score.
inline std::vector<Seed> detect_seeds(const HoughAccumulator& acc, double rel_threshold, int nms_radius) {
    if (!(rel_threshold > 0.0 && rel_threshold <= 1.0))
        throw ParameterError("detect_seeds: rel_threshold must be in (0,1]");
    if (nms_radius < 0) throw ParameterError("detect_seeds: nms_radius must be >= 0");
    const int w = acc.width();
    const int h = acc.height();
    std::vector<double> sums(static_cast<std::size_t>(w) * h);
    double global_max = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double s = acc.radial_sum(x, y);
            sums[static_cast<std::size_t>(y) * w + x] = s;
            global_max = std::max(global_max, s);
        }
    if (global_max <= 0.0) return {};

    const double floor_score = rel_threshold * global_max;
    const int r2 = nms_radius * nms_radius;
    auto sum_at = [&](int x, int y) { return sums[static_cast<std::size_t>(y) * w + x]; };

    std::vector<Seed> seeds;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double s = sum_at(x, y);
            if (s < floor_score || s <= 0.0) continue;
            bool is_max = true;
            for (int dy = -nms_radius; dy <= nms_radius && is_max; ++dy) {
                for (int dx = -nms_radius; dx <= nms_radius; ++dx) {
                    if ((dx == 0 && dy == 0) || dx * dx + dy * dy > r2) continue;
                    const int qx = x + dx;
                    const int qy = y + dy;
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const double q = sum_at(qx, qy);
                    // an earlier raster position wins a tie
                    const bool earlier = qy < y || (qy == y && qx < x);
                    if (q > s || (q == s && earlier)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            int best_r = acc.r_min();
            for (int r = acc.r_min() + 1; r <= acc.r_max(); ++r)
                if (acc.at(x, y, r) > acc.at(x, y, best_r)) best_r = r;
            seeds.push_back(Seed{x, y, best_r, s});
        }
    }
    std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.score > b.score; });
    return seeds;
}

inline std::vector<Seed> find_seeds(const GrayImage& img, const SeedParams& params) {
    const auto field = gradient(img);
    const auto acc = hough_accumulate(img, field, params.r_min, params.r_max, params.direction, params.noise_floor);
    return detect_seeds(acc, params.rel_threshold, params.nms_radius > 0 ? params.nms_radius : params.r_min);
}

}  // namespace tomoseg::seeding

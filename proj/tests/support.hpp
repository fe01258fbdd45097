#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tomoseg/image.hpp"
#include "tomoseg/membrane.hpp"

namespace testing_support {

inline constexpr int kPropertyCases = 500;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline int uniform_int(std::mt19937_64& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline tomoseg::GrayImage random_image(std::mt19937_64& g, int w, int h) {
    tomoseg::GrayImage img(w, h);
    for (auto& v : img.data()) v = uniform(g, 0.0, 1.0);
    return img;
}

/// Bright gaussian ring of the given radius on a flat background.
inline tomoseg::GrayImage ring_image(int w, int h, double cx, double cy, double radius, double sigma = 1.2,
                                     double background = 0.2, double peak = 0.8) {
    tomoseg::GrayImage img(w, h, background);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d = std::hypot(x - cx, y - cy) - radius;
            img.at(x, y) = std::min(1.0, img.at(x, y) + (peak - background) * std::exp(-d * d / (2.0 * sigma * sigma)));
        }
    return img;
}

/// Stamps a profile by Chebyshev distance from the centre: every ray from the
/// centre to the square frame walks one Chebyshev ring per step, so each
/// ray's samples at steps [d - |M|/2, d + |M|/2] equal M exactly.
inline tomoseg::GrayImage chebyshev_stamp(int side, const std::vector<double>& profile, int d, double fill) {
    tomoseg::GrayImage img(side, side, fill);
    const int c = side / 2;
    const int half = static_cast<int>(profile.size()) / 2;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const int k = std::max(std::abs(x - c), std::abs(y - c)) - (d - half);
            if (k >= 0 && k < static_cast<int>(profile.size())) img.at(x, y) = profile[k];
        }
    return img;
}

/// Direct evaluation of f(m,n) = 1/(HW) sum I1(i,j) I2(i+m, j+n) with circular indexing.
inline double spatial_correlation(const std::vector<double>& a, const std::vector<double>& b, int h, int w, int m,
                                  int n) {
    double s = 0.0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int ii = ((i + m) % h + h) % h;
            const int jj = ((j + n) % w + w) % w;
            s += a[static_cast<std::size_t>(i) * w + j] * b[static_cast<std::size_t>(ii) * w + jj];
        }
    return s / (static_cast<double>(h) * w);
}

}  // namespace testing_support

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/evaluation.hpp"
#include "tomoseg/image.hpp"
#include "tomoseg/membrane.hpp"
#include "tomoseg/postprocess.hpp"

namespace tomoseg::phantom {

/// Synthetic tilt stack of ring-membrane disks.
struct PhantomSpec {
    int width = 256;
    int height = 256;
    int slices = 21;
    int disks = 5;
    int radius_min = 14;
    int radius_max = 18;
    double membrane_sigma = 1.2;     // gaussian width of the membrane ring, px
    double background = 0.25;
    double interior = 0.30;
    double membrane_contrast = 0.45; // ring peak above the local base level
    int profile_half_length = 3;     // true template spans radius +/- this
    std::optional<double> snr_db = 5.16;  // if set, overrides noise_sigma per slice
    double noise_sigma = 0.0;
    int jitter = 4;                  // per-slice translation drawn from [-jitter, jitter]^2
    double spurious_rate = 0.1;      // per slice and disk slot, chance of a one-slice extra disk

    void validate() const {
        if (width < 8 || height < 8) throw ParameterError("phantom: image too small");
        if (slices < 1 || disks < 0) throw ParameterError("phantom: need >= 1 slice and >= 0 disks");
        if (radius_min < 2 || radius_max < radius_min) throw ParameterError("phantom: bad radius range");
        if (2 * radius_max >= std::min(width, height)) throw ParameterError("phantom: radii must be < min dimension / 2");
        if (noise_sigma < 0.0) throw ParameterError("phantom: noise sigma must be >= 0");
        if (jitter < 0) throw ParameterError("phantom: jitter must be >= 0");
        if (!(spurious_rate >= 0.0 && spurious_rate <= 1.0)) throw ParameterError("phantom: spurious rate outside [0,1]");
        if (profile_half_length < 1) throw ParameterError("phantom: profile half length must be >= 1");
        const double peak = std::max(background, interior) + membrane_contrast;
        if (background < 0.0 || interior < 0.0 || peak > 1.0) throw ParameterError("phantom: intensities outside [0,1]");
    }
};

struct Disk {
    double x = 0.0;
    double y = 0.0;
    int radius = 0;
};

struct Phantom {
    SliceStack stack;
    std::vector<GrayImage> clean;
    evaluation::GroundTruth truth;
    std::vector<std::vector<std::uint16_t>> true_labels;  // disk k+1 inside its radius
    std::vector<Disk> disks;                               // untranslated positions
    std::vector<std::vector<Disk>> spurious;               // per slice
    std::vector<postprocess::Shift> translations;          // content of slice k moved by (m0, n0)
    membrane::MembraneProfile profile;
    std::vector<double> noise_sigma;                       // per slice
};

namespace detail {

inline double smooth_inside(double rho, double radius) { return std::clamp(radius - rho + 0.5, 0.0, 1.0); }

inline double radial_value(const PhantomSpec& s, double rho, double radius) {
    const double d = rho - radius;
    return (s.interior - s.background) * smooth_inside(rho, radius) +
           s.membrane_contrast * std::exp(-d * d / (2.0 * s.membrane_sigma * s.membrane_sigma));
}

inline bool far_enough(const Disk& c, const std::vector<Disk>& others, double gap) {
    for (const auto& o : others)
        if (std::hypot(c.x - o.x, c.y - o.y) < c.radius + o.radius + gap) return false;
    return true;
}

inline double variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size());
}

}  // namespace detail

/// Radial membrane template of a phantom disk, inside to outside.
inline membrane::MembraneProfile true_profile(const PhantomSpec& s) {
    membrane::MembraneProfile p;
    const double radius = 100.0;  // far from the centre; the profile is radius independent
    for (int k = -s.profile_half_length; k <= s.profile_half_length; ++k)
        p.values.push_back(s.background + detail::radial_value(s, radius + k, radius));
    return p;
}

/// 10 log10(var(clean) / var(noisy - clean)); infinite when the images agree.
inline double measure_snr_db(const GrayImage& clean, const GrayImage& noisy) {
    std::vector<double> diff(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) diff[i] = noisy.data()[i] - clean.data()[i];
    const double noise = detail::variance(diff);
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(detail::variance(clean.data()) / noise);
}

inline Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const double gap = 6.0 * spec.membrane_sigma + 4.0;
    const double margin = spec.radius_max + spec.jitter + 4.0 * spec.membrane_sigma + 2.0;
    if (2.0 * margin >= std::min(spec.width, spec.height)) throw ParameterError("phantom: image too small for margins");

    auto place = [&](const std::vector<Disk>& taken, int radius, double lo_x, double hi_x, double lo_y,
                     double hi_y) -> Disk {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Disk d{std::round(uniform(lo_x, hi_x)), std::round(uniform(lo_y, hi_y)), radius};
            if (detail::far_enough(d, taken, gap)) return d;
        }
        throw ParameterError("phantom: cannot pack the requested disks");
    };

    Phantom out;
    out.profile = true_profile(spec);
    for (int k = 0; k < spec.disks; ++k) {
        const int r = uniform_int(spec.radius_min, spec.radius_max);
        out.disks.push_back(place(out.disks, r, margin, spec.width - 1 - margin, margin, spec.height - 1 - margin));
    }

    std::vector<GrayImage> noisy;
    std::vector<double> angles;
    out.truth.slices.resize(static_cast<std::size_t>(spec.slices));
    for (int s = 0; s < spec.slices; ++s) {
        const postprocess::Shift t{uniform_int(-spec.jitter, spec.jitter), uniform_int(-spec.jitter, spec.jitter)};
        out.translations.push_back(t);

        std::vector<Disk> present;
        for (const auto& d : out.disks) present.push_back({d.x + t.n0, d.y + t.m0, d.radius});
        std::vector<Disk> extra;
        for (int k = 0; k < spec.disks; ++k) {
            if (uniform(0.0, 1.0) >= spec.spurious_rate) continue;
            const int r = uniform_int(spec.radius_min, spec.radius_max);
            std::vector<Disk> taken = present;
            taken.insert(taken.end(), extra.begin(), extra.end());
            const double m = r + 4.0 * spec.membrane_sigma + 2.0;
            extra.push_back(place(taken, r, m, spec.width - 1 - m, m, spec.height - 1 - m));
        }
        out.spurious.push_back(extra);

        GrayImage clean(spec.width, spec.height, spec.background);
        std::vector<std::uint16_t> labels(clean.size(), 0);
        std::vector<Disk> all = present;
        all.insert(all.end(), extra.begin(), extra.end());
        for (std::size_t k = 0; k < all.size(); ++k) {
            const Disk& d = all[k];
            const int reach = d.radius + static_cast<int>(std::ceil(5.0 * spec.membrane_sigma)) + 1;
            for (int y = std::max(0, static_cast<int>(d.y) - reach); y <= std::min(spec.height - 1, static_cast<int>(d.y) + reach); ++y)
                for (int x = std::max(0, static_cast<int>(d.x) - reach); x <= std::min(spec.width - 1, static_cast<int>(d.x) + reach); ++x) {
                    const double rho = std::hypot(x - d.x, y - d.y);
                    clean.at(x, y) = std::clamp(clean.at(x, y) + detail::radial_value(spec, rho, d.radius), 0.0, 1.0);
                    if (k < present.size() && rho <= d.radius)
                        labels[static_cast<std::size_t>(y) * spec.width + x] = static_cast<std::uint16_t>(k + 1);
                }
        }

        double sigma = spec.noise_sigma;
        if (spec.snr_db) sigma = std::sqrt(detail::variance(clean.data()) / std::pow(10.0, *spec.snr_db / 10.0));
        out.noise_sigma.push_back(sigma);
        GrayImage img = clean;
        if (sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, sigma);
            for (auto& v : img.data()) v = std::clamp(v + noise(rng), 0.0, 1.0);
        }

        for (const auto& d : present) out.truth.slices[s].push_back({d.x, d.y, static_cast<double>(d.radius)});
        out.true_labels.push_back(std::move(labels));
        out.clean.push_back(std::move(clean));
        noisy.push_back(std::move(img));
        angles.push_back(-60.0 + (spec.slices > 1 ? 120.0 * s / (spec.slices - 1) : 0.0));
    }
    out.stack = SliceStack(std::move(noisy), std::move(angles));
    return out;
}

}  // namespace tomoseg::phantom

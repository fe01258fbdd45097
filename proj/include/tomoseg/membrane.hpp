#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"

namespace tomoseg::membrane {

/// Averaged membrane intensity template, ordered from cell interior to exterior.
struct MembraneProfile {
    std::vector<double> values;

    std::size_t length() const { return values.size(); }

    void validate() const {
        if (values.size() < 3) throw ParameterError("MembraneProfile: need at least 3 samples");
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("MembraneProfile: value outside [0,1]");
    }
};

/// Biological size priors plus the membrane template.
struct BioParams {
    int r_min = 8;
    int r_max = 12;
    int l_m = 16;  // longest cell extent; crop half-width
    MembraneProfile profile;

    void validate() const {
        if (!(r_min > 0 && r_min <= r_max && r_max <= l_m))
            throw ParameterError("BioParams: need 0 < r_min <= r_max <= l_m");
        profile.validate();
        if (profile.length() > static_cast<std::size_t>(l_m))
            throw ParameterError("BioParams: membrane profile longer than l_m");
    }
};

/// Square window of side 2*l_m+1 centred on a seed. Pixels beyond the parent
/// slice are zero and flagged invalid.
struct CropWindow {
    Pixel origin;  // top-left corner in the parent slice (may be negative)
    int side = 0;
    GrayImage image;
    std::vector<std::uint8_t> valid;
    Pixel seed_local;

    bool is_valid(int x, int y) const { return valid[static_cast<std::size_t>(y) * side + x] != 0; }
    Pixel to_parent(Pixel local) const { return {local.x + origin.x, local.y + origin.y}; }
};

inline CropWindow make_crop(const GrayImage& slice, Pixel seed, int l_m) {
    if (l_m < 1) throw ParameterError("make_crop: l_m must be >= 1");
    CropWindow crop;
    crop.side = 2 * l_m + 1;
    crop.origin = {seed.x - l_m, seed.y - l_m};
    crop.seed_local = {l_m, l_m};
    crop.image = GrayImage(crop.side, crop.side);
    crop.valid.assign(static_cast<std::size_t>(crop.side) * crop.side, 0);
    for (int y = 0; y < crop.side; ++y)
        for (int x = 0; x < crop.side; ++x) {
            const Pixel p = crop.to_parent({x, y});
            if (slice.contains(p)) {
                crop.image.at(x, y) = slice.at(p);
                crop.valid[static_cast<std::size_t>(y) * crop.side + x] = 1;
            }
        }
    return crop;
}

/// Per-pixel maximal normalized cross-correlation; -1 where no window landed.
struct CCImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

inline std::vector<double> sample_ray(const GrayImage& img, Pixel from, Pixel to) {
    std::vector<double> out;
    for (const Pixel& p : bresenham_line(from, to)) out.push_back(img.at(p));
    return out;
}

// Nearest-pixel resampling; ties at half positions go up.
inline std::vector<double> resample_nearest(const std::vector<double>& v, std::size_t length) {
    std::vector<double> out(length);
    if (length == 1) {
        out[0] = v.front();
        return out;
    }
    const double scale = static_cast<double>(v.size() - 1) / static_cast<double>(length - 1);
    for (std::size_t j = 0; j < length; ++j) {
        auto src = static_cast<std::size_t>(std::floor(j * scale + 0.5));
        out[j] = v[std::min(src, v.size() - 1)];
    }
    return out;
}

}  // namespace detail

/// Mean of the intensity profiles along the given inner->outer rays, each
/// resampled to the median ray length.
inline MembraneProfile estimate_profile(const GrayImage& img, const std::vector<std::pair<Pixel, Pixel>>& rays) {
    if (rays.empty()) throw ParameterError("estimate_profile: no rays given");
    std::vector<std::vector<double>> samples;
    std::vector<std::size_t> lengths;
    for (const auto& [inner, outer] : rays) {
        if (!img.contains(inner) || !img.contains(outer))
            throw ParameterError("estimate_profile: ray endpoint outside image");
        samples.push_back(detail::sample_ray(img, inner, outer));
        lengths.push_back(samples.back().size());
    }
    std::sort(lengths.begin(), lengths.end());
    const std::size_t mid = lengths.size() / 2;
    const std::size_t target = lengths.size() % 2 == 1
                                   ? lengths[mid]
                                   : static_cast<std::size_t>(std::floor((lengths[mid - 1] + lengths[mid]) / 2.0 + 0.5));

    MembraneProfile profile{std::vector<double>(target, 0.0)};
    for (const auto& s : samples) {
        const auto r = detail::resample_nearest(s, target);
        for (std::size_t j = 0; j < target; ++j) profile.values[j] += r[j];
    }
    for (auto& v : profile.values) v /= static_cast<double>(samples.size());
    return profile;
}

/// Pearson correlation of a window against a template that is already
/// centred and unit-norm. Zero-variance windows score 0.
inline double pearson(std::span<const double> window, std::span<const double> template_unit) {
    const auto n = window.size();
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(n);
    double dot = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = window[i] - mean;
        dot += d * template_unit[i];
        ss += d * d;
    }
    if (ss < 1e-20) return 0.0;
    return std::clamp(dot / std::sqrt(ss), -1.0, 1.0);
}

/// Zero-mean, unit-norm copy of the template. Throws if the template is flat.
inline std::vector<double> unit_template(const MembraneProfile& profile) {
    std::vector<double> t = profile.values;
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= static_cast<double>(t.size());
    double ss = 0.0;
    for (auto& v : t) {
        v -= mean;
        ss += v * v;
    }
    if (ss < 1e-20) throw ParameterError("membrane template has zero variance");
    const double norm = std::sqrt(ss);
    for (auto& v : t) v /= norm;
    return t;
}

/// Border pixels of a side x side square in clockwise order from the top-left.
inline std::vector<Pixel> frame_pixels(int side) {
    std::vector<Pixel> border;
    if (side == 1) return {Pixel{0, 0}};
    for (int x = 0; x < side; ++x) border.push_back({x, 0});
    for (int y = 1; y < side; ++y) border.push_back({side - 1, y});
    for (int x = side - 2; x >= 0; --x) border.push_back({x, side - 1});
    for (int y = side - 2; y >= 1; --y) border.push_back({0, y});
    return border;
}

/// Which pixels receive a window's score. `Span`: every pixel the window
/// covers. `Center`: the window's centre pixel (index |M|/2); pixels that are
/// never a centre but lie under some window fall back to the span maximum.
enum class CCAssign { Span, Center };

/// Casts a ray from the seed to every frame pixel, slides a |M|-long window
/// along it and keeps, at each crop pixel, the strongest correlation among
/// the windows assigned to it. Windows touching padded pixels are skipped.
inline CCImage build_cc_image(const CropWindow& crop, const BioParams& bio, CCAssign assign = CCAssign::Center) {
    const auto& m = bio.profile.values;
    if (m.size() > static_cast<std::size_t>(bio.l_m))
        throw ParameterError("build_cc_image: template longer than l_m");
    if (crop.side != crop.image.width() || crop.side != crop.image.height())
        throw DimensionError("build_cc_image: malformed crop");
    const auto unit = unit_template(bio.profile);
    const std::size_t len = m.size();

    const std::size_t n = static_cast<std::size_t>(crop.side) * crop.side;
    CCImage cc{crop.side, crop.side, std::vector<double>(n, -1.0)};
    std::vector<double> centre(n, -1.0);
    std::vector<std::uint8_t> is_centre(n, 0);
    std::vector<double> window(len);
    for (const Pixel& end : frame_pixels(crop.side)) {
        const auto ray = bresenham_line(crop.seed_local, end);
        if (ray.size() < len) continue;
        for (std::size_t start = 0; start + len <= ray.size(); ++start) {
            bool usable = true;
            for (std::size_t k = 0; k < len; ++k) {
                const Pixel& p = ray[start + k];
                if (!crop.is_valid(p.x, p.y)) {
                    usable = false;
                    break;
                }
                window[k] = crop.image.at(p);
            }
            if (!usable) continue;
            const double score = pearson(window, unit);
            for (std::size_t k = 0; k < len; ++k) {
                const Pixel& p = ray[start + k];
                double& slot = cc.at(p.x, p.y);
                slot = std::max(slot, score);
            }
            const Pixel& c = ray[start + len / 2];
            const auto ci = static_cast<std::size_t>(c.y) * crop.side + c.x;
            centre[ci] = std::max(centre[ci], score);
            is_centre[ci] = 1;
        }
    }
    if (assign == CCAssign::Center)
        for (std::size_t i = 0; i < n; ++i)
            if (is_centre[i]) cc.values[i] = centre[i];
    return cc;
}

}  // namespace tomoseg::membrane

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tomoseg/errors.hpp"

namespace tomoseg {

/// Integer pixel coordinate; x is the column, y the row.
struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Grayscale slice with row-major intensities normalized to [0,1].
class GrayImage {
public:
    GrayImage() = default;

    GrayImage(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw DimensionError("GrayImage: width and height must be >= 1");
        if (!(fill >= 0.0 && fill <= 1.0))
            throw ParameterError("GrayImage: fill value outside [0,1]");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    GrayImage(int width, int height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1 || height < 1)
            throw DimensionError("GrayImage: width and height must be >= 1");
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw DimensionError("GrayImage: data length != width*height");
        for (double v : data_)
            if (!(v >= 0.0 && v <= 1.0))
                throw ParameterError("GrayImage: intensity outside [0,1]");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(Pixel p) const { return contains(p.x, p.y); }

    double& at(int x, int y) { return data_[index(x, y)]; }
    double at(int x, int y) const { return data_[index(x, y)]; }
    double at(Pixel p) const { return at(p.x, p.y); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Ordered stack of equally sized slices, optionally tagged with tilt angles.
class SliceStack {
public:
    SliceStack() = default;

    explicit SliceStack(std::vector<GrayImage> slices, std::vector<double> angles = {})
        : slices_(std::move(slices)), angles_(std::move(angles)) {
        for (const auto& s : slices_)
            if (s.width() != slices_.front().width() || s.height() != slices_.front().height())
                throw DimensionError("SliceStack: slices differ in size");
        if (!angles_.empty()) {
            if (angles_.size() != slices_.size())
                throw ParameterError("SliceStack: angle count != slice count");
            for (std::size_t i = 1; i < angles_.size(); ++i)
                if (!(angles_[i] > angles_[i - 1]))
                    throw ParameterError("SliceStack: angles must be strictly increasing");
        }
    }

    std::size_t size() const { return slices_.size(); }
    bool empty() const { return slices_.empty(); }
    const GrayImage& operator[](std::size_t i) const { return slices_[i]; }
    const std::vector<GrayImage>& slices() const { return slices_; }
    const std::vector<double>& angles() const { return angles_; }
    bool has_angles() const { return !angles_.empty(); }

private:
    std::vector<GrayImage> slices_;
    std::vector<double> angles_;
};

/// Per-pixel gradient components, same layout as the source image.
struct VectorField {
    int width = 0;
    int height = 0;
    std::vector<double> dx;
    std::vector<double> dy;

    VectorField() = default;
    VectorField(int w, int h)
        : width(w), height(h),
          dx(static_cast<std::size_t>(w) * h, 0.0),
          dy(static_cast<std::size_t>(w) * h, 0.0) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    double magnitude(int x, int y) const {
        const auto i = index(x, y);
        return std::hypot(dx[i], dy[i]);
    }
};

/// Unnormalized integer samples as read from disk.
struct RawImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> samples;
};

/// Maps integer samples to [0,1] by dividing by the full-scale value of the bit depth.
inline GrayImage normalize(const RawImage& raw, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw ParameterError("normalize: bit depth must be 8 or 16");
    if (raw.samples.size() != static_cast<std::size_t>(raw.width) * raw.height)
        throw MalformedInput("normalize: sample count != width*height");
    const double full_scale = bit_depth == 8 ? 255.0 : 65535.0;
    std::vector<double> out(raw.samples.size());
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
        if (raw.samples[i] > full_scale)
            throw MalformedInput("normalize: sample " + std::to_string(raw.samples[i]) +
                                 " exceeds " + std::to_string(bit_depth) + "-bit range");
        out[i] = raw.samples[i] / full_scale;
    }
    return GrayImage(raw.width, raw.height, std::move(out));
}

/// Sobel 3x3 gradient scaled by 1/8 so a unit-slope ramp yields unit response.
/// Border pixels keep a zero gradient.
inline VectorField gradient(const GrayImage& img) {
    const int w = img.width();
    const int h = img.height();
    if (w < 3 || h < 3)
        throw DimensionError("gradient: image must be at least 3x3");
    VectorField field(w, h);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double gx = (img.at(x + 1, y - 1) + 2.0 * img.at(x + 1, y) + img.at(x + 1, y + 1)) -
                              (img.at(x - 1, y - 1) + 2.0 * img.at(x - 1, y) + img.at(x - 1, y + 1));
            const double gy = (img.at(x - 1, y + 1) + 2.0 * img.at(x, y + 1) + img.at(x + 1, y + 1)) -
                              (img.at(x - 1, y - 1) + 2.0 * img.at(x, y - 1) + img.at(x + 1, y - 1));
            const auto i = field.index(x, y);
            field.dx[i] = gx / 8.0;
            field.dy[i] = gy / 8.0;
        }
    }
    return field;
}

/// Integer-error Bresenham line from p0 to p1, both endpoints included.
///
/// Walks the major axis one pixel per step. The minor coordinate is the exact
/// line value rounded to nearest; exact half-way ties go to the larger minor
/// coordinate regardless of the walking direction.
inline std::vector<Pixel> bresenham_line(Pixel p0, Pixel p1) {
    const int dx = p1.x - p0.x;
    const int dy = p1.y - p0.y;
    const bool x_major = std::abs(dx) >= std::abs(dy);
    const int n = x_major ? std::abs(dx) : std::abs(dy);
    const int major_step = (x_major ? dx : dy) >= 0 ? 1 : -1;
    const int dminor = x_major ? dy : dx;

    std::vector<Pixel> line;
    line.reserve(static_cast<std::size_t>(n) + 1);
    if (n == 0) {
        line.push_back(p0);
        return line;
    }

    // Minor offset at step k is floor((2*k*dminor + n) / (2n)); the error term
    // tracks the numerator relative to the current offset window [2n*off, 2n*(off+1)).
    long long err = n;  // numerator at k = 0
    int offset = 0;
    const long long two_n = 2LL * n;
    for (int k = 0; k <= n; ++k) {
        const int major = k * major_step;
        line.push_back(x_major ? Pixel{p0.x + major, p0.y + offset}
                               : Pixel{p0.x + offset, p0.y + major});
        err += 2LL * dminor;
        while (err >= two_n) {
            err -= two_n;
            ++offset;
        }
        while (err < 0) {
            err += two_n;
            --offset;
        }
    }
    return line;
}

}  // namespace tomoseg

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"

namespace tomoseg::pgm {

/// Raw samples plus the bit depth implied by the header's maxval.
struct Decoded {
    RawImage raw;
    int bit_depth = 8;
    int maxval = 255;
};

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            in.get();
        } else {
            return;
        }
    }
}

inline int read_header_int(std::istream& in, const char* what) {
    skip_space_and_comments(in);
    int value = -1;
    if (!(in >> value) || value < 0)
        throw MalformedInput(std::string("PGM: bad ") + what);
    return value;
}

}  // namespace detail

/// Binary P5 decoder. 16-bit samples are big-endian.
inline Decoded decode(std::istream& in) {
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw MalformedInput("PGM: missing P5 magic");
    Decoded out;
    out.raw.width = detail::read_header_int(in, "width");
    out.raw.height = detail::read_header_int(in, "height");
    out.maxval = detail::read_header_int(in, "maxval");
    if (out.raw.width < 1 || out.raw.height < 1)
        throw MalformedInput("PGM: empty image");
    if (out.maxval < 1 || out.maxval > 65535)
        throw MalformedInput("PGM: maxval out of range");
    // exactly one whitespace byte separates header from raster
    const int sep = in.get();
    if (sep != ' ' && sep != '\n' && sep != '\r' && sep != '\t')
        throw MalformedInput("PGM: missing raster separator");

    out.bit_depth = out.maxval < 256 ? 8 : 16;
    const std::size_t count = static_cast<std::size_t>(out.raw.width) * out.raw.height;
    const std::size_t bytes_per = out.bit_depth == 8 ? 1 : 2;
    std::vector<unsigned char> buf(count * bytes_per);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw MalformedInput("PGM: truncated raster");

    out.raw.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint16_t v = bytes_per == 1
                                    ? buf[i]
                                    : static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
        if (v > out.maxval)
            throw MalformedInput("PGM: sample exceeds maxval");
        out.raw.samples[i] = v;
    }
    return out;
}

inline void encode(std::ostream& out, const RawImage& raw, int maxval) {
    if (maxval < 1 || maxval > 65535)
        throw ParameterError("PGM: maxval out of range");
    if (raw.samples.size() != static_cast<std::size_t>(raw.width) * raw.height)
        throw DimensionError("PGM: sample count != width*height");
    out << "P5\n" << raw.width << ' ' << raw.height << '\n' << maxval << '\n';
    std::vector<unsigned char> buf;
    if (maxval < 256) {
        buf.reserve(raw.samples.size());
        for (auto v : raw.samples) {
            if (v > maxval) throw ParameterError("PGM: sample exceeds maxval");
            buf.push_back(static_cast<unsigned char>(v));
        }
    } else {
        buf.reserve(raw.samples.size() * 2);
        for (auto v : raw.samples) {
            if (v > maxval) throw ParameterError("PGM: sample exceeds maxval");
            buf.push_back(static_cast<unsigned char>(v >> 8));
            buf.push_back(static_cast<unsigned char>(v & 0xff));
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline GrayImage read_gray(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInput("cannot open " + path.string());
    auto decoded = decode(in);
    return normalize(decoded.raw, decoded.bit_depth);
}

/// Quantizes [0,1] intensities to 8 or 16 bits (round to nearest).
inline RawImage quantize(const GrayImage& img, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw ParameterError("quantize: bit depth must be 8 or 16");
    const double full = bit_depth == 8 ? 255.0 : 65535.0;
    RawImage raw{img.width(), img.height(), {}};
    raw.samples.reserve(img.size());
    for (double v : img.data())
        raw.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * full)));
    return raw;
}

inline void write_gray(const std::filesystem::path& path, const GrayImage& img, int bit_depth = 16) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot write " + path.string());
    encode(out, quantize(img, bit_depth), bit_depth == 8 ? 255 : 65535);
}

/// Label maps are always 16-bit: 0 background, k >= 1 cell index.
inline void write_labels(const std::filesystem::path& path, int width, int height,
                         const std::vector<std::uint16_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInput("cannot write " + path.string());
    encode(out, RawImage{width, height, labels}, 65535);
}

inline RawImage read_labels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInput("cannot open " + path.string());
    return decode(in).raw;
}

}  // namespace tomoseg::pgm

namespace tomoseg {

/// One manifest line: `<relative-path> <angle-degrees>`.
struct ManifestEntry {
    std::filesystem::path path;
    double angle = 0.0;
};

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw MalformedInput("cannot open manifest " + manifest.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
        std::istringstream ls(line);
        ManifestEntry e;
        std::string rel;
        if (!(ls >> rel >> e.angle))
            throw MalformedInput("manifest line " + std::to_string(lineno) + ": expected '<path> <angle>'");
        e.path = manifest.parent_path() / rel;
        if (!entries.empty() && !(e.angle > entries.back().angle))
            throw MalformedInput("manifest line " + std::to_string(lineno) + ": angles must increase");
        entries.push_back(std::move(e));
    }
    return entries;
}

inline void write_manifest(const std::filesystem::path& manifest,
                           const std::vector<std::pair<std::string, double>>& entries) {
    std::ofstream out(manifest);
    if (!out) throw MalformedInput("cannot write " + manifest.string());
    for (const auto& [rel, angle] : entries) out << rel << ' ' << angle << '\n';
}

inline SliceStack load_stack(const std::filesystem::path& manifest) {
    std::vector<GrayImage> slices;
    std::vector<double> angles;
    for (const auto& e : read_manifest(manifest)) {
        slices.push_back(pgm::read_gray(e.path));
        angles.push_back(e.angle);
    }
    return SliceStack(std::move(slices), std::move(angles));
}

}  // namespace tomoseg

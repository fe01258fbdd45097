#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include "tomoseg/assembly.hpp"
#include "tomoseg/errors.hpp"
#include "tomoseg/image.hpp"
#include "tomoseg/parallel.hpp"

namespace tomoseg::postprocess {

using assembly::CellRecord;

/// Per-slice cell records for a whole stack.
struct CellMatrix {
    std::vector<std::vector<CellRecord>> slices;

    std::size_t size() const { return slices.size(); }
    std::size_t cell_count() const {
        std::size_t n = 0;
        for (const auto& s : slices) n += s.size();
        return n;
    }
};

enum class FilterMode { All, Majority };

struct FilterParams {
    int window = 3;
    double center_tol = 5.0;
    double area_tol = 0.2;
    double perim_tol = 0.2;
    FilterMode mode = FilterMode::All;

    void validate() const {
        if (window != 3 && window != 5 && window != 7) throw ParameterError("filter: window must be 3, 5 or 7");
        if (!(center_tol > 0.0 && area_tol > 0.0 && perim_tol > 0.0))
            throw ParameterError("filter: tolerances must be > 0");
    }
};

inline bool cells_match(const CellRecord& a, const CellRecord& b, const FilterParams& p) {
    const double dc = std::hypot(a.cx - b.cx, a.cy - b.cy);
    const double da = std::abs(a.area - b.area);
    const double dp = std::abs(a.perimeter - b.perimeter);
    return dc <= p.center_tol && da <= p.area_tol * std::max(a.area, b.area) &&
           dp <= p.perim_tol * std::max(a.perimeter, b.perimeter);
}

struct FilterResult {
    CellMatrix matrix;
    std::vector<bool> verified;  // false for boundary slices passed through unchanged
};

/// Sliding-window consistency check. A cell in an interior slice survives if
/// it matches a cell in every other slice of its window (All) or if, counting
/// its own slice, a strict majority of the window contains it (Majority).
inline FilterResult consistency_filter(const CellMatrix& matrix, const FilterParams& params) {
    params.validate();
    const int n = static_cast<int>(matrix.size());
    if (n < params.window) throw ParameterError("consistency_filter: fewer slices than the window size");
    const int half = params.window / 2;

    FilterResult out;
    out.matrix.slices.resize(matrix.size());
    out.verified.assign(matrix.size(), false);
    for (int i = 0; i < n; ++i) {
        if (i < half || i >= n - half) {
            out.matrix.slices[i] = matrix.slices[i];
            continue;
        }
        out.verified[i] = true;
        for (const auto& cell : matrix.slices[i]) {
            int matched = 0;
            for (int j = i - half; j <= i + half; ++j) {
                if (j == i) continue;
                const auto& other = matrix.slices[j];
                if (std::any_of(other.begin(), other.end(),
                                [&](const CellRecord& o) { return cells_match(cell, o, params); }))
                    ++matched;
            }
            const bool keep = params.mode == FilterMode::All ? matched == params.window - 1
                                                             : 2 * (matched + 1) > params.window;
            if (keep) out.matrix.slices[i].push_back(cell);
        }
    }
    return out;
}

/// Row (m0) and column (n0) offset such that I2(i+m0, j+n0) best matches I1(i, j).
struct Shift {
    int m0 = 0;
    int n0 = 0;

    friend bool operator==(const Shift&, const Shift&) = default;
    Shift operator+(const Shift& o) const { return {m0 + o.m0, n0 + o.n0}; }
    Shift operator-() const { return {-m0, -n0}; }
};

/// Real-valued row-major plane; the alignment stage works on these rather
/// than GrayImage because padding and masks need not be normalized.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    Plane() = default;
    Plane(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}
    explicit Plane(const GrayImage& img) : width(img.width()), height(img.height()), values(img.data().begin(), img.data().end()) {}

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Signed lag for FFT index k over period n: [0, n/2] stay, the rest wrap negative.
inline int signed_lag(int k, int n) { return k <= n / 2 ? k : k - n; }

/// Peak of a correlation surface indexed [m * width + n] with circular lags.
/// Values within 1e-9 of the maximum (relative) tie; ties prefer the smallest
/// |lag|^2, then the smaller m0, then the smaller n0.
inline Shift pick_peak(const std::vector<double>& surface, int height, int width) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : surface) best = std::max(best, v);
    const double tol = 1e-9 * std::max(std::abs(best), 1e-300);
    Shift pick{};
    long long pick_norm = -1;
    for (int k = 0; k < height; ++k)
        for (int l = 0; l < width; ++l) {
            if (surface[static_cast<std::size_t>(k) * width + l] < best - tol) continue;
            const Shift s{signed_lag(k, height), signed_lag(l, width)};
            const long long norm = 1LL * s.m0 * s.m0 + 1LL * s.n0 * s.n0;
            if (pick_norm < 0 || norm < pick_norm || (norm == pick_norm && (s.m0 < pick.m0 || (s.m0 == pick.m0 && s.n0 < pick.n0)))) {
                pick = s;
                pick_norm = norm;
            }
        }
    return pick;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

struct PlanGuard {
    fftw_plan plan = nullptr;
    ~PlanGuard() {
        if (plan) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

}  // namespace detail

/// Circular cross-correlation surface f(m,n) = 1/(HW) sum I1(i,j) I2(i+m, j+n)
/// computed as IFFT(conj(FFT(I1)) * FFT(I2)).
inline std::vector<double> correlation_surface(const Plane& a, const Plane& b) {
    if (a.width != b.width || a.height != b.height) throw DimensionError("correlation: images differ in size");
    const int h = a.height;
    const int w = a.width;
    const std::size_t real_n = static_cast<std::size_t>(h) * w;
    const std::size_t cplx_n = static_cast<std::size_t>(h) * (w / 2 + 1);

    auto in = detail::fftw_buffer<double>(real_n);
    auto fa = detail::fftw_buffer<fftw_complex>(cplx_n);
    auto fb = detail::fftw_buffer<fftw_complex>(cplx_n);

    detail::PlanGuard fwd_a;
    detail::PlanGuard fwd_b;
    detail::PlanGuard inv;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fwd_a.plan = fftw_plan_dft_r2c_2d(h, w, in.get(), fa.get(), FFTW_ESTIMATE);
        fwd_b.plan = fftw_plan_dft_r2c_2d(h, w, in.get(), fb.get(), FFTW_ESTIMATE);
        inv.plan = fftw_plan_dft_c2r_2d(h, w, fa.get(), in.get(), FFTW_ESTIMATE);
    }
    std::copy(a.values.begin(), a.values.end(), in.get());
    fftw_execute(fwd_a.plan);
    std::copy(b.values.begin(), b.values.end(), in.get());
    fftw_execute(fwd_b.plan);

    for (std::size_t k = 0; k < cplx_n; ++k) {
        const std::complex<double> x(fa[k][0], fa[k][1]);
        const std::complex<double> y(fb[k][0], fb[k][1]);
        const auto z = std::conj(x) * y;
        fa[k][0] = z.real();
        fa[k][1] = z.imag();
    }
    fftw_execute(inv.plan);  // unnormalized: scaled by h*w

    const double scale = 1.0 / (static_cast<double>(real_n) * static_cast<double>(real_n));
    std::vector<double> surface(real_n);
    for (std::size_t k = 0; k < real_n; ++k) surface[k] = in[k] * scale;
    return surface;
}

inline bool all_zero(const Plane& p) {
    return std::all_of(p.values.begin(), p.values.end(), [](double v) { return v == 0.0; });
}

inline Shift cross_correlation_shift(const Plane& i1, const Plane& i2) {
    if (all_zero(i1) || all_zero(i2)) throw UndefinedPeak("cross_correlation_shift: all-zero image");
    return pick_peak(correlation_surface(i1, i2), i1.height, i1.width);
}

inline Shift cross_correlation_shift(const GrayImage& i1, const GrayImage& i2) {
    return cross_correlation_shift(Plane(i1), Plane(i2));
}

/// Copies `p` into the top-left of a zero plane of twice its size.
inline Plane pad_double(const Plane& p) {
    Plane out(2 * p.width, 2 * p.height);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) out.at(x, y) = p.at(x, y);
    return out;
}

/// out(i, j) = in(i + s.m0, j + s.n0); samples from outside are zero.
inline Plane translate(const Plane& in, const Shift& s) {
    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            const int sy = y + s.m0;
            const int sx = x + s.n0;
            if (sx >= 0 && sy >= 0 && sx < in.width && sy < in.height) out.at(x, y) = in.at(sx, sy);
        }
    return out;
}

struct AlignResult {
    std::vector<Plane> aligned;
    std::vector<Shift> pairwise;     // pairwise[k]: slice k-1 -> k; pairwise[0] = (0,0)
    std::vector<Shift> corrections;  // translation applied to slice k (negated cumulative shift)
};

/// Aligns every slice to the first by chaining consecutive shifts. Masks are
/// zero-padded to twice their size before correlating.
inline AlignResult align_stack(const std::vector<Plane>& masks, int parallelism = 1) {
    if (masks.size() < 2) throw ParameterError("align_stack: need at least 2 slices");
    for (const auto& m : masks)
        if (m.width != masks.front().width || m.height != masks.front().height)
            throw DimensionError("align_stack: slices differ in size");

    AlignResult out;
    out.pairwise.assign(masks.size(), Shift{});
    parallel_for(masks.size() - 1, parallelism, [&](std::size_t k) {
        out.pairwise[k + 1] = cross_correlation_shift(pad_double(masks[k]), pad_double(masks[k + 1]));
    });

    Shift cumulative{};
    out.corrections.reserve(masks.size());
    out.aligned.reserve(masks.size());
    for (std::size_t k = 0; k < masks.size(); ++k) {
        cumulative = cumulative + out.pairwise[k];
        out.corrections.push_back(-cumulative);
        out.aligned.push_back(translate(masks[k], cumulative));
    }
    return out;
}

/// Moves every record of slice k by corrections[k] (x by n0, y by m0).
inline CellMatrix translate_matrix(CellMatrix matrix, const std::vector<Shift>& corrections) {
    if (corrections.size() != matrix.size()) throw ParameterError("translate_matrix: one correction per slice");
    for (std::size_t k = 0; k < matrix.size(); ++k)
        for (auto& r : matrix.slices[k]) {
            r.cx += corrections[k].n0;
            r.cy += corrections[k].m0;
            for (auto& p : r.mask) {
                p.x += corrections[k].n0;
                p.y += corrections[k].m0;
            }
        }
    return matrix;
}

/// Binary plane of the cells in one slice: 1 inside any cell, else 0.
inline Plane binary_mask(const std::vector<CellRecord>& cells, int width, int height) {
    Plane p(width, height);
    for (const auto& c : cells)
        for (const auto& px : c.mask)
            if (px.x >= 0 && px.y >= 0 && px.x < width && px.y < height) p.at(px.x, px.y) = 1.0;
    return p;
}

}  // namespace tomoseg::postprocess

#include "camfp/wavelet/wavelet.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace camfp::wavelet {

const std::array<double, 8> kDaubechies8 = {
    0.2303778133088964,  0.7148465705529154,  0.6308807679298587,  -0.02798376941685985,
    -0.1870348117190931, 0.030841381835560764, 0.032883011666885,  -0.010597401785069032};

namespace {

constexpr std::size_t kTaps = kDaubechies8.size();

struct Filters {
    std::array<double, kTaps> lo = kDaubechies8;
    std::array<double, kTaps> hi{};
    Filters() {
        for (std::size_t n = 0; n < kTaps; ++n) hi[n] = (n % 2 ? -1.0 : 1.0) * lo[kTaps - 1 - n];
    }
};
const Filters kFilters;

// One periodic analysis step on a line of even length n read with `stride`.
void analyze_line(const double* x, std::size_t n, std::size_t stride, double* lo, double* hi, std::size_t out_stride) {
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0, d = 0;
        for (std::size_t t = 0; t < kTaps; ++t) {
            const double v = x[((2 * k + t) % n) * stride];
            a += kFilters.lo[t] * v;
            d += kFilters.hi[t] * v;
        }
        lo[k * out_stride] = a;
        hi[k * out_stride] = d;
    }
}

void synthesize_line(const double* lo, const double* hi, std::size_t in_stride, std::size_t n, double* x,
                     std::size_t stride) {
    for (std::size_t m = 0; m < n; ++m) x[m * stride] = 0.0;
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = lo[k * in_stride], d = hi[k * in_stride];
        for (std::size_t t = 0; t < kTaps; ++t) x[((2 * k + t) % n) * stride] += kFilters.lo[t] * a + kFilters.hi[t] * d;
    }
}

// Single-level split of an even-sized plane into (approx, horizontal, vertical, diagonal).
void split(const Plane& in, Plane& ll, DetailBands& bands) {
    const std::size_t R = in.rows, C = in.cols, hr = R / 2, hc = C / 2;
    Plane rl(R, hc), rh(R, hc);  // row-filtered: low / high along each row
    for (std::size_t r = 0; r < R; ++r) analyze_line(&in.data[r * C], C, 1, &rl.data[r * hc], &rh.data[r * hc], 1);
    ll = Plane(hr, hc);
    bands.horizontal = Plane(hr, hc);  // low along rows, high along columns
    bands.vertical = Plane(hr, hc);    // high along rows, low along columns
    bands.diagonal = Plane(hr, hc);
    for (std::size_t c = 0; c < hc; ++c) {
        analyze_line(&rl.data[c], R, hc, &ll.data[c], &bands.horizontal.data[c], hc);
        analyze_line(&rh.data[c], R, hc, &bands.vertical.data[c], &bands.diagonal.data[c], hc);
    }
}

Plane merge(const Plane& ll, const DetailBands& bands) {
    const std::size_t hr = ll.rows, hc = ll.cols, R = 2 * hr, C = 2 * hc;
    Plane rl(R, hc), rh(R, hc);
    for (std::size_t c = 0; c < hc; ++c) {
        synthesize_line(&ll.data[c], &bands.horizontal.data[c], hc, R, &rl.data[c], hc);
        synthesize_line(&bands.vertical.data[c], &bands.diagonal.data[c], hc, R, &rh.data[c], hc);
    }
    Plane out(R, C);
    for (std::size_t r = 0; r < R; ++r) synthesize_line(&rl.data[r * hc], &rh.data[r * hc], 1, C, &out.data[r * C], 1);
    return out;
}

std::size_t reflect(std::size_t i, std::size_t n) { return i < n ? i : 2 * n - 1 - i; }

Plane pad_reflect(const Plane& in, std::size_t rows, std::size_t cols) {
    if (rows == in.rows && cols == in.cols) return in;
    Plane out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r, c) = in(reflect(r, in.rows), reflect(c, in.cols));
    return out;
}

std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

void check_band_shape(const Plane& p, std::size_t r, std::size_t c) {
    if (p.rows != r || p.cols != c) throw ShapeError("idwt2: inconsistent subband shapes");
}

// Periodic W x W box mean of `sq`, separable, via running sums.
Plane box_mean_periodic(const Plane& sq, int w) {
    const std::size_t R = sq.rows, C = sq.cols;
    const long half = w / 2;
    auto wrap = [](long i, std::size_t n) { return static_cast<std::size_t>(((i % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n)); };
    Plane tmp(R, C), out(R, C);
    for (std::size_t r = 0; r < R; ++r) {
        const double* row = &sq.data[r * C];
        double s = 0;
        for (long k = -half; k <= half; ++k) s += row[wrap(k, C)];
        for (std::size_t c = 0; c < C; ++c) {
            tmp(r, c) = s;
            s += row[wrap(static_cast<long>(c) + half + 1, C)] - row[wrap(static_cast<long>(c) - half, C)];
        }
    }
    const double norm = 1.0 / (static_cast<double>(w) * w);
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0;
        for (long k = -half; k <= half; ++k) s += tmp(wrap(k, R), c);
        for (std::size_t r = 0; r < R; ++r) {
            out(r, c) = s * norm;
            s += tmp(wrap(static_cast<long>(r) + half + 1, R), c) - tmp(wrap(static_cast<long>(r) - half, R), c);
        }
    }
    return out;
}

void shrink_to_noise(Plane& band, const DenoiseParams& params) {
    const Plane var = local_signal_variance(band, params);
    for (std::size_t i = 0; i < band.size(); ++i) {
        band.data[i] *= params.sigma0_sq / (var.data[i] + params.sigma0_sq);
    }
}

}  // namespace

WaveletPyramid dwt2(const Plane& plane, int levels) {
    if (levels < 1) throw ArgumentError("dwt2: levels must be >= 1");
    const std::size_t block = std::size_t{1} << levels;
    if (plane.rows < block || plane.cols < block) {
        throw ShapeError("dwt2: plane " + std::to_string(plane.rows) + "x" + std::to_string(plane.cols) +
                         " is smaller than 2^levels = " + std::to_string(block));
    }
    WaveletPyramid pyr;
    pyr.rows = plane.rows;
    pyr.cols = plane.cols;
    Plane current = pad_reflect(plane, round_up(plane.rows, block), round_up(plane.cols, block));
    pyr.details.resize(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) {
        Plane ll;
        split(current, ll, pyr.details[static_cast<std::size_t>(l)]);
        current = std::move(ll);
    }
    pyr.approximation = std::move(current);
    return pyr;
}

Plane idwt2(const WaveletPyramid& pyr) {
    if (pyr.details.empty()) throw ShapeError("idwt2: pyramid has no levels");
    Plane current = pyr.approximation;
    for (int l = pyr.levels() - 1; l >= 0; --l) {
        const auto& b = pyr.details[static_cast<std::size_t>(l)];
        check_band_shape(b.horizontal, current.rows, current.cols);
        check_band_shape(b.vertical, current.rows, current.cols);
        check_band_shape(b.diagonal, current.rows, current.cols);
        current = merge(current, b);
    }
    if (current.rows < pyr.rows || current.cols < pyr.cols) throw ShapeError("idwt2: recorded size exceeds pyramid");
    if (current.rows == pyr.rows && current.cols == pyr.cols) return current;
    Plane out(pyr.rows, pyr.cols);
    for (std::size_t r = 0; r < pyr.rows; ++r)
        std::copy_n(&current.data[r * current.cols], pyr.cols, &out.data[r * pyr.cols]);
    return out;
}

void DenoiseParams::validate() const {
    if (!(sigma0_sq > 0)) throw ArgumentError("denoise: sigma0_sq must be > 0");
    if (levels < 1) throw ArgumentError("denoise: levels must be >= 1");
    if (window_sizes.empty()) throw ArgumentError("denoise: at least one window size required");
    for (int w : window_sizes) {
        if (w < 3 || w % 2 == 0) throw ArgumentError("denoise: window sizes must be odd and >= 3, got " + std::to_string(w));
    }
}

Plane local_signal_variance(const Plane& band, const DenoiseParams& params) {
    params.validate();
    Plane sq(band.rows, band.cols);
    for (std::size_t i = 0; i < band.size(); ++i) sq.data[i] = band.data[i] * band.data[i];
    Plane var(band.rows, band.cols, std::numeric_limits<double>::infinity());
    for (int w : params.window_sizes) {
        const Plane m = box_mean_periodic(sq, w);
        for (std::size_t i = 0; i < var.size(); ++i) var.data[i] = std::min(var.data[i], std::max(0.0, m.data[i] - params.sigma0_sq));
    }
    return var;
}

Plane wiener_residual(const Plane& plane, const DenoiseParams& params) {
    params.validate();
    WaveletPyramid pyr = dwt2(plane, params.levels);
    for (auto& b : pyr.details) {
        shrink_to_noise(b.horizontal, params);
        shrink_to_noise(b.vertical, params);
        shrink_to_noise(b.diagonal, params);
    }
    std::fill(pyr.approximation.data.begin(), pyr.approximation.data.end(), 0.0);
    return idwt2(pyr);
}

}  // namespace camfp::wavelet

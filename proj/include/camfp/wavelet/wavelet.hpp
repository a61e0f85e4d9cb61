#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "camfp/common/plane.hpp"

namespace camfp::wavelet {

/// 8-tap Daubechies orthonormal low-pass filter (4 vanishing moments).
extern const std::array<double, 8> kDaubechies8;

struct DetailBands {
    Plane horizontal;
    Plane vertical;
    Plane diagonal;
};

/// Result of a multi-level separable 2-D DWT with periodic extension.
/// `details[0]` is the finest level. The input is reflected up to the next
/// multiple of 2^levels before the transform; `rows`/`cols` record the
/// original size so the inverse can crop.
struct WaveletPyramid {
    std::vector<DetailBands> details;
    Plane approximation;
    std::size_t rows = 0;
    std::size_t cols = 0;

    int levels() const { return static_cast<int>(details.size()); }
};

WaveletPyramid dwt2(const Plane& plane, int levels);
Plane idwt2(const WaveletPyramid& pyr);

struct DenoiseParams {
    double sigma0_sq = 9.0;  // noise variance prior, 8-bit intensity units squared
    std::vector<int> window_sizes{3, 5, 7, 9};
    int levels = 4;

    void validate() const;
};

/// Local signal variance of a detail subband: for each coefficient the
/// minimum over window sizes of max(0, mean_W(c^2) - sigma0_sq), with W x W
/// box averages taken under periodic extension.
Plane local_signal_variance(const Plane& band, const DenoiseParams& params);

/// Noise residual of a plane in 8-bit intensity scale, computed entirely in
/// the wavelet domain: every detail coefficient c becomes
/// c * sigma0^2 / (var + sigma0^2), the approximation band is zeroed, and the
/// result is inverted.
Plane wiener_residual(const Plane& plane, const DenoiseParams& params);

}  // namespace camfp::wavelet

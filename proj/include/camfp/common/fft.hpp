#pragma once

#include <complex>
#include <vector>

#include "camfp/common/plane.hpp"

namespace camfp::fft {

/// Half-spectrum of a real plane: rows x (cols/2 + 1) bins, row-major.
using Spectrum = std::vector<std::complex<double>>;

Spectrum forward(const Plane& p);

/// Inverse of `forward`, normalized so inverse(forward(p)) == p.
Plane inverse(Spectrum s, std::size_t rows, std::size_t cols);

/// Signed frequency in cycles/sample of DFT bin k out of n.
inline double bin_frequency(std::size_t k, std::size_t n) {
    const double f = static_cast<double>(k) / static_cast<double>(n);
    return k <= n / 2 ? f : f - 1.0;
}

}  // namespace camfp::fft

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>

#include "camfp/common/plane.hpp"
#include "camfp/imgcore/image.hpp"
#include "camfp/wavelet/wavelet.hpp"

namespace camfp::prnu {

inline constexpr double kPceThreshold = 50.0;

/// Luminance-combined, zero-meaned noise residual of one image.
struct NoiseResidual {
    Plane plane;
    std::string source_id;
};

enum class FingerprintKind { natural, flat };

std::string to_string(FingerprintKind kind);
FingerprintKind fingerprint_kind_from_string(const std::string& s);

struct ReferenceFingerprint {
    std::string device_id;
    Plane plane;
    std::size_t n_images = 0;
    FingerprintKind kind = FingerprintKind::natural;
};

struct PceReport {
    double pce = 0.0;
    std::size_t peak_row = 0;  // cyclic shift of the residual relative to the reference
    std::size_t peak_col = 0;
    bool matched = false;
    double threshold = kPceThreshold;
};

/// Subtracts the global mean, then every row mean, then every column mean.
void zero_mean(Plane& plane);

NoiseResidual extract_residual(const img::Image& image, const wavelet::DenoiseParams& params,
                               std::string source_id = {});

/// Mean of the residual planes, zero-meaned.
ReferenceFingerprint build_reference(std::span<const NoiseResidual> residuals, std::string device_id,
                                     FingerprintKind kind);

/// Normalized cross-correlation; 0 when either input is constant.
double ncc(const Plane& a, const Plane& b);

/// Cyclic cross-correlation surface rho(s) = sum_p a(p + s) * b(p), computed
/// with real-to-complex FFTs.
Plane cross_correlation(const Plane& a, const Plane& b);

/// Peak to correlation energy of `residual` against `reference`: squared
/// maximum of the correlation surface over its mean square outside the
/// (2r+1)^2 cyclic neighbourhood of the peak.
PceReport pce(const Plane& residual, const Plane& reference, std::size_t exclude_radius = 5,
              double threshold = kPceThreshold);
PceReport pce(const NoiseResidual& residual, const ReferenceFingerprint& ref, std::size_t exclude_radius = 5,
              double threshold = kPceThreshold);

struct PipelineParams {
    wavelet::DenoiseParams denoise;
    std::size_t target = 224;
    std::size_t exclude_radius = 5;
    double threshold = kPceThreshold;
};

/// Full-resolution check: residual of the image itself against the reference.
PceReport pce_pipeline_direct(const img::Image& image, const ReferenceFingerprint& ref, const PipelineParams& params);

/// Removal check: down-sample to target x target, up-sample back to the
/// reference size with bilinear resampling, extract the residual, and
/// compute PCE.
PceReport pce_pipeline_downsampled(const img::Image& image, const ReferenceFingerprint& ref,
                                   const PipelineParams& params);

/// Writes `<stem>.cftr` (float64 plane) and `<stem>.json` (metadata sidecar).
void save_fingerprint(const ReferenceFingerprint& ref, const std::filesystem::path& stem);
ReferenceFingerprint load_fingerprint(const std::filesystem::path& stem);

}  // namespace camfp::prnu

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camfp/common/plane.hpp"
#include "camfp/eval/manifest.hpp"
#include "camfp/imgcore/image.hpp"
#include "camfp/imgcore/jpeg.hpp"

namespace camfp::sim {

/// Knobs for device generation. Spreads are half-widths of the total range
/// around 1 (gains, gammas) or around `vignette_strength`; half of each spread
/// is shared by the model and half is the per-device offset.
struct DeviceOptions {
    std::size_t height = 896;
    std::size_t width = 896;
    double prnu_strength = 0.02;
    /// PRNU spectrum is zeroed wherever either axis frequency is below this
    /// many cycles per pixel.
    double prnu_cutoff = 0.2;
    /// Standard deviation of per-capture temporal sensor noise.
    double noise_sigma = 0.03;
    double gain_spread = 0.03;
    double gamma_spread = 0.05;
    double vignette_strength = 0.08;
    double vignette_spread = 0.04;
    double vignette_power = 2.0;
    /// Multiplies every per-device offset; 0 makes devices of a model identical
    /// apart from their PRNU.
    double device_offset_scale = 1.0;

    void validate() const;
};

struct DeviceProfile {
    std::string device_id;
    std::string model_id;
    std::size_t device_index = 0;
    Plane prnu;
    double prnu_strength = 0.02;
    double noise_sigma = 0.0;
    std::array<double, 3> channel_gains{1, 1, 1};
    std::array<double, 3> response_gamma{1, 1, 1};
    double vignette_strength = 0.08;
    double vignette_power = 2.0;
    std::uint64_t seed = 0;
};

DeviceProfile make_device(const std::string& model_id, std::size_t device_index, std::uint64_t seed,
                          const DeviceOptions& options = {});

/// Zero-mean, unit-variance Gaussian pattern with the low band removed.
Plane highpass_pattern(std::size_t rows, std::size_t cols, double cutoff, std::uint64_t key);

enum class SceneKind { gradient, texture, shapes, flatfield };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& s);

struct SceneSpec {
    SceneKind kind = SceneKind::texture;
    std::size_t height = 896;
    std::size_t width = 896;
    std::uint64_t scene_seed = 0;
};

/// Neutral 3-channel scene with values in [0.05, 0.95].
img::Image render_scene(const SceneSpec& spec);

/// Device response with temporal noise drawn from `noise_seed`, demosaic
/// low-pass, optional JPEG.
img::Image capture(const img::Image& scene, const DeviceProfile& dev, std::optional<img::JpegQuality> jpeg_q = {},
                   std::uint64_t noise_seed = 0);

/// Mean over channels of |g_c(a) - g_c(b)|.
double gain_distance(const DeviceProfile& a, const DeviceProfile& b);

struct SimulationConfig {
    std::size_t n_models = 3;
    std::size_t devices_per_model = 2;
    std::size_t images_per_device = 40;
    std::vector<SceneKind> scene_mix{SceneKind::texture, SceneKind::shapes, SceneKind::gradient, SceneKind::flatfield};
    std::optional<int> jpeg_q;
    std::uint64_t seed = 1;
    double train_fraction = 0.75;
    DeviceOptions device;
    std::size_t jobs = 1;
};

/// Minimum same-model gain distance required by simulate_dataset.
constexpr double kMinSameModelGainDistance = 0.01;

std::vector<DeviceProfile> make_devices(const SimulationConfig& config);

/// Writes images/<device>/<device>_<n>.png, manifest.jsonl and devices.json
/// under out_dir and returns the split manifest.
eval::DatasetManifest simulate_dataset(const SimulationConfig& config, const std::filesystem::path& out_dir);

}  // namespace camfp::sim

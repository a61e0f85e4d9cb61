#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "camfp/eval/manifest.hpp"
#include "camfp/imgcore/image.hpp"

namespace camfp::sampling {

constexpr std::size_t kPatchSide = 224;
constexpr std::size_t kPatchPixels = kPatchSide * kPatchSide;

enum class SamplingMode { down, random_orig, random_down };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& s);

struct Patch {
    img::Image data;  // side x side x 3
    std::string source_image_id;
    std::string device_id;
    SamplingMode mode = SamplingMode::down;
    std::size_t patch_index = 0;
    std::uint64_t seed = 0;
};

struct SamplingPlan {
    SamplingMode mode = SamplingMode::down;
    std::size_t patches_per_image = 50;
    std::uint64_t seed = 0;
    std::size_t target = kPatchSide;

    void validate() const;
};

/// Bilinear reduction to target x target.
Patch down_patch(const img::Image& img, std::size_t target = kPatchSide);

/// Largest patch count random_patches_from_original can serve for an image.
std::size_t max_random_patches(std::size_t height, std::size_t width, std::size_t target = kPatchSide);

/// Disjoint patches from one seeded permutation of all pixel coordinates.
std::vector<Patch> random_patches_from_original(const img::Image& img, const SamplingPlan& plan,
                                                const std::string& image_id);

/// Each patch is an independent permutation of the down-sampled pixels.
std::vector<Patch> random_patches_from_downsampled(const img::Image& img, const SamplingPlan& plan,
                                                   const std::string& image_id);

/// Dispatches on plan.mode and stamps ids on every patch. Down mode yields one patch.
std::vector<Patch> make_patches(const img::Image& img, const SamplingPlan& plan, const std::string& image_id,
                                const std::string& device_id);

/// Mean absolute autocorrelation of the luminance at horizontal and vertical lags 1..max_lag.
double mean_abs_autocorrelation(const img::Image& img, std::size_t max_lag);

// ---- persistence

struct PatchRecord {
    std::string patch_file;  // relative to the index directory
    std::string device_id;
    std::string source_image_id;
    SamplingMode mode = SamplingMode::down;
    std::size_t patch_index = 0;
    std::uint64_t seed = 0;
    eval::Split split = eval::Split::unassigned;
};

struct PatchIndex {
    std::vector<PatchRecord> rows;
    std::filesystem::path root;

    std::filesystem::path resolve(const PatchRecord& r) const { return root / r.patch_file; }
};

void save_patch(const Patch& patch, const std::filesystem::path& file);
img::Image load_patch(const std::filesystem::path& file);

void save_patch_index(const PatchIndex& index, const std::filesystem::path& file);
PatchIndex load_patch_index(const std::filesystem::path& file);

/// Optional per-image transform applied after loading and before sampling.
using ImageTransform = std::function<img::Image(const img::Image&, const eval::ManifestRow&)>;

struct PatchJob {
    SamplingPlan plan;
    std::size_t jobs = 1;
    /// Restricts generation to one split; unassigned means all rows.
    eval::Split only_split = eval::Split::unassigned;
    ImageTransform transform;
};

/// Samples every manifest row, writes one tensor file per patch under out_dir
/// and the index at out_dir/index.jsonl. Patches inherit the image's split.
PatchIndex build_patch_dataset(const eval::DatasetManifest& manifest, const PatchJob& job,
                               const std::filesystem::path& out_dir);

}  // namespace camfp::sampling

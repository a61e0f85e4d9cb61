#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "camfp/eval/manifest.hpp"
#include "camfp/eval/metrics.hpp"
#include "camfp/manip/manip.hpp"
#include "camfp/nn/model.hpp"
#include "camfp/prnu/prnu.hpp"
#include "camfp/sampling/sampling.hpp"
#include "camfp/simcam/simcam.hpp"
#include "camfp/svm/svm.hpp"
#include "json.hpp"

namespace camfp::eval {

using Logger = std::function<void(const std::string&)>;

struct AuditConfig {
    bool enabled = true;
    std::size_t images = 10;
    std::size_t reference_images = 20;
    double threshold = prnu::kPceThreshold;
};

struct ExperimentConfig {
    /// Directory holding manifest.jsonl, or a manifest file.
    std::filesystem::path dataset;
    /// When set and the dataset manifest does not exist yet, the dataset is simulated first.
    std::optional<sim::SimulationConfig> simulate;
    std::filesystem::path out_dir;
    sampling::SamplingMode mode = sampling::SamplingMode::down;
    std::size_t patches_per_image = 50;
    std::uint64_t split_seed = 1;
    std::uint64_t sampling_seed = 2;
    std::uint64_t train_seed = 3;
    nn::MiniResNetConfig network;
    nn::TrainConfig train;
    svm::SvmParams svm;
    /// Applied to test images only, before sampling.
    std::optional<manip::ManipSpec> manip;
    AuditConfig audit;
    /// Directory of an earlier run whose network and SVM are reused instead of training.
    std::optional<std::filesystem::path> pretrained;
    std::size_t jobs = 1;
    bool keep_patches = true;
    std::size_t feature_batch = 16;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& c);

sim::SimulationConfig simulation_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const sim::SimulationConfig& c);
nlohmann::ordered_json to_json(const EvalReport& r, const std::vector<std::string>& class_names);

struct AuditEntry {
    std::string image;
    std::string device_id;
    double pce = 0.0;
};

struct ExperimentResult {
    EvalReport patch_report;
    EvalReport image_report;
    std::vector<AuditEntry> audit;
    std::vector<double> train_loss;
    std::size_t train_patches = 0;
    std::size_t test_patches = 0;
    std::filesystem::path report_path;
    nlohmann::ordered_json report;
};

/// Loads the dataset manifest (simulating it if configured), splitting it when unsplit.
DatasetManifest load_or_create_dataset(const ExperimentConfig& config, const Logger& log = {});

/// Reference fingerprint per device from its first `n_images` train images
/// (by path), cached as <dataset>/fingerprints/<device>.{cftr,json}.
std::vector<prnu::ReferenceFingerprint> device_references(const DatasetManifest& manifest, std::size_t n_images,
                                                          const Logger& log = {});

/// Applies the sampling mode's transform to one image and returns it
/// resampled to the reference size, ready for residual extraction.
img::Image prnu_free_view(const img::Image& image, sampling::SamplingMode mode, std::uint64_t seed,
                          const std::string& image_id, std::size_t ref_rows, std::size_t ref_cols);

/// patches -> network training -> GAP features -> SVM -> evaluation, with
/// the PRNU-free and leakage audits. Every artifact is written under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const Logger& log = {});

// ---- feature files

struct FeatureRow {
    std::string device_id;
    std::string source_image_id;
    std::vector<double> values;
};

void save_features_csv(const std::vector<FeatureRow>& rows, const std::filesystem::path& file);
std::vector<FeatureRow> load_features_csv(const std::filesystem::path& file);

/// Loads patch tensors of the given index rows into an in-memory training set.
nn::Dataset load_patch_dataset(const sampling::PatchIndex& index, const std::vector<std::size_t>& rows,
                               const std::vector<std::string>& devices);

}  // namespace camfp::eval

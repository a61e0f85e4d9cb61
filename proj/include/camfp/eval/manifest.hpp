#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace camfp::eval {

enum class Split { unassigned, train, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRow {
    std::string path;  // relative to the manifest directory unless absolute; doubles as source image id
    std::string device_id;
    std::string model_id;
    Split split = Split::unassigned;
    std::string scene_kind;  // optional
};

struct DatasetManifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path root;  // directory relative paths resolve against

    /// Sorted distinct device ids; a device's class label is its index here.
    std::vector<std::string> devices() const;
    std::size_t device_count() const { return devices().size(); }
    std::filesystem::path resolve(const ManifestRow& row) const;
};

/// JSON-lines, one object per row: {path, device_id, model_id, scene_kind, split}.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file);

/// Loads a JSON-lines manifest; with `check_files` every path must exist.
DatasetManifest load_manifest(const std::filesystem::path& file, bool check_files = true);

/// Per-device uniform random image-level split: round(train_fraction * n)
/// images train, the rest test. Devices with fewer than 4 images are rejected.
DatasetManifest split_manifest(DatasetManifest manifest, std::uint64_t seed, double train_fraction = 0.75);

}  // namespace camfp::eval

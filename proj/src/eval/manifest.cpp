#include "camfp/eval/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "camfp/common/error.hpp"
#include "camfp/common/rng.hpp"
#include "json.hpp"

namespace camfp::eval {

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        case Split::unassigned: break;
    }
    return "";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    if (s.empty() || s == "none") return Split::unassigned;
    throw DataError("unknown split '" + s + "'");
}

std::vector<std::string> DatasetManifest::devices() const {
    std::set<std::string> ids;
    for (const auto& r : rows) ids.insert(r.device_id);
    return {ids.begin(), ids.end()};
}

std::filesystem::path DatasetManifest::resolve(const ManifestRow& row) const {
    const std::filesystem::path p(row.path);
    return p.is_absolute() ? p : root / p;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + file.string());
    for (const auto& r : manifest.rows) {
        nlohmann::ordered_json j;
        j["path"] = r.path;
        j["device_id"] = r.device_id;
        j["model_id"] = r.model_id;
        j["scene_kind"] = r.scene_kind;
        j["split"] = to_string(r.split);
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + file.string());
}

DatasetManifest load_manifest(const std::filesystem::path& file, bool check_files) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open manifest " + file.string());
    DatasetManifest m;
    m.root = file.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestRow r;
            r.path = j.at("path").get<std::string>();
            r.device_id = j.at("device_id").get<std::string>();
            r.model_id = j.value("model_id", std::string{});
            r.scene_kind = j.value("scene_kind", std::string{});
            r.split = split_from_string(j.value("split", std::string{}));
            m.rows.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (check_files) {
        for (const auto& r : m.rows) {
            if (!std::filesystem::exists(m.resolve(r))) throw DataError("manifest path does not exist: " + r.path);
        }
    }
    return m;
}

DatasetManifest split_manifest(DatasetManifest manifest, std::uint64_t seed, double train_fraction) {
    if (!(train_fraction > 0 && train_fraction < 1)) throw ArgumentError("train fraction must be in (0,1)");
    std::map<std::string, std::vector<std::size_t>> by_device;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) by_device[manifest.rows[i].device_id].push_back(i);
    for (auto& [device, idx] : by_device) {
        if (idx.size() < 4) {
            throw SplitError("device '" + device + "' has " + std::to_string(idx.size()) +
                             " images; at least 4 are needed for a train/test split");
        }
        // Order by path so the split does not depend on row order.
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return manifest.rows[a].path < manifest.rows[b].path; });
        CounterRng rng(derive_seed(seed, fnv1a64(device)));
        rng.shuffle(std::span<std::size_t>(idx));
        const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(idx.size()) + 0.5));
        for (std::size_t k = 0; k < idx.size(); ++k) manifest.rows[idx[k]].split = k < n_train ? Split::train : Split::test;
    }
    return manifest;
}

}  // namespace camfp::eval

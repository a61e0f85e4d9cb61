#include "camfp/sampling/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "camfp/common/error.hpp"
#include "camfp/common/parallel.hpp"
#include "camfp/common/rng.hpp"
#include "camfp/common/tensor_file.hpp"
#include "json.hpp"

namespace camfp::sampling {

namespace {

void require_rgb(const img::Image& img, const char* what) {
    if (img.channels != 3) {
        throw ShapeError(std::string(what) + ": need a 3-channel image, got " + std::to_string(img.channels));
    }
}

Patch gather(const img::Image& src, std::span<const std::uint32_t> coords, std::size_t side) {
    Patch p;
    p.data = img::Image(side, side, 3);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const float* px = &src.data[static_cast<std::size_t>(coords[i]) * 3];
        float* dst = &p.data.data[i * 3];
        dst[0] = px[0];
        dst[1] = px[1];
        dst[2] = px[2];
    }
    return p;
}

}  // namespace

std::string to_string(SamplingMode mode) {
    switch (mode) {
        case SamplingMode::down: return "down";
        case SamplingMode::random_orig: return "random_orig";
        case SamplingMode::random_down: return "random_down";
    }
    return "";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
    if (s == "down") return SamplingMode::down;
    if (s == "random_orig") return SamplingMode::random_orig;
    if (s == "random_down") return SamplingMode::random_down;
    throw ArgumentError("unknown sampling mode '" + s + "' (expected down|random_orig|random_down)");
}

void SamplingPlan::validate() const {
    if (patches_per_image == 0) throw ArgumentError("patches_per_image must be >= 1");
    if (target == 0) throw ArgumentError("patch target size must be >= 1");
}

Patch down_patch(const img::Image& img, std::size_t target) {
    require_rgb(img, "down_patch");
    Patch p;
    p.data = img::resize_bilinear(img, target, target);
    p.mode = SamplingMode::down;
    return p;
}

std::size_t max_random_patches(std::size_t height, std::size_t width, std::size_t target) {
    return height * width / (target * target);
}

std::vector<Patch> random_patches_from_original(const img::Image& img, const SamplingPlan& plan,
                                                const std::string& image_id) {
    require_rgb(img, "random_patches_from_original");
    plan.validate();
    const std::size_t per = plan.target * plan.target;
    const std::size_t n = img.pixel_count();
    const std::size_t need = plan.patches_per_image * per;
    if (need > n) {
        const std::size_t max = max_random_patches(img.height, img.width, plan.target);
        throw CapacityError("image " + image_id + " (" + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                ") holds at most " + std::to_string(max) + " disjoint random patches, requested " +
                                std::to_string(plan.patches_per_image),
                            max);
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) throw CapacityError("image too large", 0);
    // Forward Fisher-Yates stopped after `need` steps yields the leading
    // `need` entries of a uniform permutation.
    std::vector<std::uint32_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0u);
    const std::uint64_t seed = derive_seed(plan.seed, fnv1a64(image_id));
    CounterRng rng(seed);
    for (std::size_t i = 0; i < need; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(coords[i], coords[j]);
    }
    std::vector<Patch> out;
    for (std::size_t k = 0; k < plan.patches_per_image; ++k) {
        Patch p = gather(img, std::span<const std::uint32_t>(coords).subspan(k * per, per), plan.target);
        p.source_image_id = image_id;
        p.mode = SamplingMode::random_orig;
        p.patch_index = k;
        p.seed = seed;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Patch> random_patches_from_downsampled(const img::Image& img, const SamplingPlan& plan,
                                                   const std::string& image_id) {
    require_rgb(img, "random_patches_from_downsampled");
    plan.validate();
    const img::Image down = img::resize_bilinear(img, plan.target, plan.target);
    const std::size_t per = plan.target * plan.target;
    std::vector<std::uint32_t> coords(per);
    std::vector<Patch> out;
    for (std::size_t k = 0; k < plan.patches_per_image; ++k) {
        std::iota(coords.begin(), coords.end(), 0u);
        const std::uint64_t seed = derive_seed(plan.seed, fnv1a64(image_id), k);
        CounterRng rng(seed);
        rng.shuffle(std::span<std::uint32_t>(coords));
        Patch p = gather(down, coords, plan.target);
        p.source_image_id = image_id;
        p.mode = SamplingMode::random_down;
        p.patch_index = k;
        p.seed = seed;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Patch> make_patches(const img::Image& img, const SamplingPlan& plan, const std::string& image_id,
                                const std::string& device_id) {
    plan.validate();
    std::vector<Patch> out;
    switch (plan.mode) {
        case SamplingMode::down:
            out.push_back(down_patch(img, plan.target));
            out.back().seed = plan.seed;
            out.back().source_image_id = image_id;
            break;
        case SamplingMode::random_orig: out = random_patches_from_original(img, plan, image_id); break;
        case SamplingMode::random_down: out = random_patches_from_downsampled(img, plan, image_id); break;
    }
    for (auto& p : out) p.device_id = device_id;
    return out;
}

double mean_abs_autocorrelation(const img::Image& img, std::size_t max_lag) {
    const Plane y = img.channels == 3 ? img::to_luminance(img).channel_plane(0) : img.channel_plane(0);
    double mean = 0;
    for (double v : y.data) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0;
    for (double v : y.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    if (var == 0) return 0;
    double total = 0;
    std::size_t terms = 0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        for (int axis = 0; axis < 2; ++axis) {
            const std::size_t R = axis == 0 ? y.rows : y.rows - lag, C = axis == 0 ? y.cols - lag : y.cols;
            if (lag >= (axis == 0 ? y.cols : y.rows)) continue;
            double s = 0;
            for (std::size_t r = 0; r < R; ++r)
                for (std::size_t c = 0; c < C; ++c) {
                    const double b = axis == 0 ? y(r, c + lag) : y(r + lag, c);
                    s += (y(r, c) - mean) * (b - mean);
                }
            total += std::abs(s / static_cast<double>(R * C) / var);
            ++terms;
        }
    }
    return terms ? total / static_cast<double>(terms) : 0.0;
}

void save_patch(const Patch& patch, const std::filesystem::path& file) {
    const std::uint64_t shape[3] = {patch.data.height, patch.data.width, patch.data.channels};
    save_tensor(file, shape, std::span<const float>(patch.data.data));
}

img::Image load_patch(const std::filesystem::path& file) {
    const StoredTensor t = load_tensor(file);
    if (t.shape.size() != 3 || (t.shape[2] != 3 && t.shape[2] != 1)) {
        throw ShapeError("patch file " + file.string() + " is not an H x W x C tensor");
    }
    img::Image im(t.shape[0], t.shape[1], t.shape[2]);
    for (std::size_t i = 0; i < im.data.size(); ++i) im.data[i] = static_cast<float>(t.values[i]);
    return im;
}

void save_patch_index(const PatchIndex& index, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot write patch index " + file.string());
    for (const auto& r : index.rows) {
        nlohmann::ordered_json j;
        j["patch_file"] = r.patch_file;
        j["device_id"] = r.device_id;
        j["source_image_id"] = r.source_image_id;
        j["mode"] = to_string(r.mode);
        j["patch_index"] = r.patch_index;
        j["seed"] = r.seed;
        j["split"] = eval::to_string(r.split);
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + file.string());
}

PatchIndex load_patch_index(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open patch index " + file.string());
    PatchIndex index;
    index.root = file.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            PatchRecord r;
            r.patch_file = j.at("patch_file").get<std::string>();
            r.device_id = j.at("device_id").get<std::string>();
            r.source_image_id = j.at("source_image_id").get<std::string>();
            r.mode = sampling_mode_from_string(j.at("mode").get<std::string>());
            r.patch_index = j.at("patch_index").get<std::size_t>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.split = eval::split_from_string(j.value("split", std::string{}));
            index.rows.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return index;
}

PatchIndex build_patch_dataset(const eval::DatasetManifest& manifest, const PatchJob& job,
                               const std::filesystem::path& out_dir) {
    job.plan.validate();
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        if (job.only_split == eval::Split::unassigned || manifest.rows[i].split == job.only_split) rows.push_back(i);
    }
    const std::size_t per_image = job.plan.mode == SamplingMode::down ? 1 : job.plan.patches_per_image;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    for (const auto& d : manifest.devices()) {
        std::filesystem::create_directories(out_dir / d, ec);
        if (ec) throw IoError("cannot create " + (out_dir / d).string() + ": " + ec.message());
    }

    PatchIndex index;
    index.root = out_dir;
    index.rows.resize(rows.size() * per_image);
    parallel_for(rows.size(), job.jobs, [&](std::size_t k) {
        const auto& row = manifest.rows[rows[k]];
        img::Image im = img::load_image(manifest.resolve(row));
        if (job.transform) im = job.transform(im, row);
        const auto patches = make_patches(im, job.plan, row.path, row.device_id);
        const std::string stem = std::filesystem::path(row.path).stem().string();
        for (std::size_t p = 0; p < patches.size(); ++p) {
            char suffix[48];
            std::snprintf(suffix, sizeof suffix, "_r%05zu_p%03zu.cftr", rows[k], p);
            PatchRecord rec;
            rec.patch_file = row.device_id + "/" + stem + suffix;
            rec.device_id = row.device_id;
            rec.source_image_id = row.path;
            rec.mode = patches[p].mode;
            rec.patch_index = patches[p].patch_index;
            rec.seed = patches[p].seed;
            rec.split = row.split;
            save_patch(patches[p], out_dir / rec.patch_file);
            index.rows[k * per_image + p] = std::move(rec);
        }
    });
    save_patch_index(index, out_dir / "index.jsonl");
    return index;
}

}  // namespace camfp::sampling

#include "camfp/eval/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string_view>

#include "camfp/common/error.hpp"
#include "camfp/common/parallel.hpp"

namespace camfp::eval {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

void say(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

template <class Fn>
auto stage(const std::string& name, const fs::path& out_dir, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, "stage '" + name + "' failed: " + e.what() + " (artifacts kept in " +
                                   out_dir.string() + ")");
    }
}

fs::path manifest_path(const fs::path& dataset) {
    return fs::is_directory(dataset) || !dataset.has_extension() ? dataset / "manifest.jsonl" : dataset;
}

int device_label(const std::vector<std::string>& devices, const std::string& id) {
    const auto it = std::lower_bound(devices.begin(), devices.end(), id);
    if (it == devices.end() || *it != id) throw DataError("unknown device id '" + id + "'");
    return static_cast<int>(it - devices.begin());
}

void write_json_file(const fs::path& p, const ojson& j) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << j.dump(2) << "\n";
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::set<std::string> csv_sources(const fs::path& file) {
    std::set<std::string> out;
    for (const auto& r : load_features_csv(file)) out.insert(r.source_image_id);
    return out;
}

}  // namespace

DatasetManifest load_or_create_dataset(const ExperimentConfig& config, const Logger& log) {
    const fs::path mpath = manifest_path(config.dataset);
    DatasetManifest m;
    if (!fs::exists(mpath)) {
        if (!config.simulate) throw IoError("dataset manifest not found: " + mpath.string());
        say(log, "simulating dataset into " + mpath.parent_path().string());
        m = sim::simulate_dataset(*config.simulate, mpath.parent_path());
    } else {
        m = load_manifest(mpath);
    }
    const bool unsplit = std::any_of(m.rows.begin(), m.rows.end(), [](const auto& r) { return r.split == Split::unassigned; });
    if (unsplit) m = split_manifest(std::move(m), config.split_seed);
    if (m.device_count() < 2) throw DataError("classification needs at least 2 devices");
    return m;
}

std::vector<prnu::ReferenceFingerprint> device_references(const DatasetManifest& manifest, std::size_t n_images,
                                                          const Logger& log) {
    if (n_images == 0) throw ArgumentError("device_references: need at least one image per device");
    fs::path cache = manifest.root / "fingerprints";
    std::error_code ec;
    fs::create_directories(cache, ec);
    const bool can_cache = !ec;
    std::vector<prnu::ReferenceFingerprint> refs;
    for (const auto& device : manifest.devices()) {
        const fs::path stem = cache / device;
        if (can_cache && fs::exists(fs::path(stem).concat(".json"))) {
            auto ref = prnu::load_fingerprint(stem);
            if (ref.n_images == n_images) {
                refs.push_back(std::move(ref));
                continue;
            }
        }
        std::vector<const ManifestRow*> rows;
        for (const auto& r : manifest.rows)
            if (r.device_id == device && r.split == Split::train) rows.push_back(&r);
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->path < b->path; });
        if (rows.size() < n_images) {
            throw DataError("device " + device + " has " + std::to_string(rows.size()) + " train images, " +
                            std::to_string(n_images) + " needed for its reference fingerprint");
        }
        say(log, "building reference fingerprint for " + device);
        std::vector<prnu::NoiseResidual> res;
        for (std::size_t k = 0; k < n_images; ++k)
            res.push_back(prnu::extract_residual(img::load_image(manifest.resolve(*rows[k])), {}, rows[k]->path));
        auto ref = prnu::build_reference(res, device, prnu::FingerprintKind::natural);
        if (can_cache) prnu::save_fingerprint(ref, stem);
        refs.push_back(std::move(ref));
    }
    return refs;
}

img::Image prnu_free_view(const img::Image& image, sampling::SamplingMode mode, std::uint64_t seed,
                          const std::string& image_id, std::size_t ref_rows, std::size_t ref_cols) {
    sampling::SamplingPlan plan;
    plan.mode = mode;
    plan.patches_per_image = 1;
    plan.seed = seed;
    const auto patches = sampling::make_patches(image, plan, image_id, "");
    return img::resize_bilinear(patches.front().data, ref_rows, ref_cols);
}

void save_features_csv(const std::vector<FeatureRow>& rows, const fs::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw IoError("cannot write " + file.string());
    const std::size_t n = rows.empty() ? 0 : rows[0].values.size();
    out << "device_id,source_image_id";
    for (std::size_t i = 0; i < n; ++i) out << ",f" << i;
    out << "\n";
    for (const auto& r : rows) {
        if (r.device_id.find(',') != std::string::npos || r.source_image_id.find(',') != std::string::npos)
            throw DataError("features csv: identifiers must not contain commas");
        out << r.device_id << "," << r.source_image_id;
        for (double v : r.values) {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + file.string());
}

std::vector<FeatureRow> load_features_csv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("device_id,source_image_id", 0) != 0)
        throw DecodeError("features csv: missing header in " + file.string());
    const auto n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
    std::vector<FeatureRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        FeatureRow r;
        std::string cell;
        std::getline(ss, r.device_id, ',');
        std::getline(ss, r.source_image_id, ',');
        while (std::getline(ss, cell, ',')) {
            try {
                r.values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DecodeError("features csv: bad number at line " + std::to_string(lineno));
            }
        }
        if (r.values.size() != n) throw DecodeError("features csv: wrong column count at line " + std::to_string(lineno));
        rows.push_back(std::move(r));
    }
    return rows;
}

nn::Dataset load_patch_dataset(const sampling::PatchIndex& index, const std::vector<std::size_t>& rows,
                               const std::vector<std::string>& devices) {
    nn::Dataset d;
    for (auto k : rows) {
        const auto& rec = index.rows.at(k);
        img::Image p = sampling::load_patch(index.resolve(rec));
        if (d.images.empty()) {
            d.height = p.height;
            d.width = p.width;
            d.channels = p.channels;
        } else if (p.height != d.height || p.width != d.width || p.channels != d.channels) {
            throw ShapeError("patch " + rec.patch_file + " differs in shape from the rest of the set");
        }
        d.images.push_back(std::move(p.data));
        d.labels.push_back(device_label(devices, rec.device_id));
    }
    return d;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const Logger& log) {
    const fs::path out = config.out_dir;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

    const DatasetManifest manifest = stage("dataset", out, [&] { return load_or_create_dataset(config, log); });
    const auto devices = manifest.devices();
    save_manifest(manifest, out / "manifest.jsonl");
    ExperimentResult result;

    // PRNU-free audit before any training.
    stage("audit", out, [&] {
        if (!config.audit.enabled) return;
        const auto refs = device_references(manifest, config.audit.reference_images, log);
        std::vector<const ManifestRow*> tests;
        for (const auto& r : manifest.rows)
            if (r.split == Split::test) tests.push_back(&r);
        std::sort(tests.begin(), tests.end(), [](auto* a, auto* b) { return a->path < b->path; });
        if (tests.size() < config.audit.images)
            throw DataError("audit needs " + std::to_string(config.audit.images) + " test images, dataset has " +
                            std::to_string(tests.size()));
        for (std::size_t k = 0; k < config.audit.images; ++k) {
            const ManifestRow& row = *tests[k * tests.size() / config.audit.images];
            img::Image im = img::load_image(manifest.resolve(row));
            if (config.manip) im = manip::apply(im, *config.manip);
            const auto& ref = refs[static_cast<std::size_t>(device_label(devices, row.device_id))];
            const img::Image view = prnu_free_view(im, config.mode, config.sampling_seed, row.path, ref.plane.rows,
                                                   ref.plane.cols);
            const double pce = prnu::pce(prnu::extract_residual(view, {}), ref).pce;
            result.audit.push_back({row.path, row.device_id, pce});
            say(log, "audit " + row.path + " PCE " + fmt_double(pce));
        }
        for (const auto& a : result.audit) {
            if (a.pce >= config.audit.threshold) {
                throw DataError("PRNU-free audit failed: " + a.image + " has PCE " + fmt_double(a.pce) +
                                " >= " + fmt_double(config.audit.threshold) + " against its own device reference");
            }
        }
    });

    // Patches. Train patches are only needed when training here.
    const fs::path patch_dir = out / "patches";
    sampling::PatchJob job;
    job.plan.mode = config.mode;
    job.plan.patches_per_image = config.patches_per_image;
    job.plan.seed = config.sampling_seed;
    job.jobs = config.jobs;
    sampling::PatchIndex train_index, test_index;
    stage("patches", out, [&] {
        if (!config.pretrained) {
            say(log, "sampling train patches");
            job.only_split = Split::train;
            train_index = sampling::build_patch_dataset(manifest, job, patch_dir / "train");
        }
        say(log, "sampling test patches");
        job.only_split = Split::test;
        if (config.manip) {
            const manip::ManipSpec spec = *config.manip;
            job.transform = [spec](const img::Image& im, const ManifestRow&) { return manip::apply(im, spec); };
        }
        test_index = sampling::build_patch_dataset(manifest, job, patch_dir / "test");
        sampling::PatchIndex combined;
        combined.root = patch_dir;
        for (auto [idx, sub] : {std::pair{&train_index, "train/"}, std::pair{&test_index, "test/"}})
            for (auto r : idx->rows) {
                r.patch_file = sub + r.patch_file;
                combined.rows.push_back(std::move(r));
            }
        sampling::save_patch_index(combined, patch_dir / "index.jsonl");
    });
    result.train_patches = train_index.rows.size();
    result.test_patches = test_index.rows.size();

    // Network + SVM.
    nn::MiniResNet<float> model;
    svm::SvmModel classifier;
    std::set<std::string> train_sources, svm_sources;
    ojson training = ojson::object();
    if (config.pretrained) {
        stage("load-pretrained", out, [&] {
            const fs::path pre = *config.pretrained;
            model = nn::load_checkpoint(pre / "model");
            classifier = svm::load_svm(pre / "svm.model");
            if (model.config().num_classes != devices.size())
                throw DataError("pretrained network has " + std::to_string(model.config().num_classes) +
                                " classes, dataset has " + std::to_string(devices.size()) + " devices");
            const auto pre_index = sampling::load_patch_index(pre / "patches" / "index.jsonl");
            for (const auto& r : pre_index.rows)
                if (r.split == Split::train) train_sources.insert(r.source_image_id);
            svm_sources = csv_sources(pre / "features_train.csv");
            training["pretrained"] = pre.string();
        });
    } else {
        stage("train", out, [&] {
            std::vector<std::size_t> rows(train_index.rows.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            const nn::Dataset data = load_patch_dataset(train_index, rows, devices);
            for (const auto& r : train_index.rows) train_sources.insert(r.source_image_id);
            nn::MiniResNetConfig net = config.network;
            net.in_channels = data.channels;
            net.num_classes = devices.size();
            model = nn::MiniResNet<float>(net, config.train_seed);
            nn::TrainConfig tc = config.train;
            tc.seed = config.train_seed;
            say(log, "training on " + std::to_string(data.size()) + " patches");
            const auto tr = nn::train(model, data, tc, [&](std::size_t e, double loss, double acc) {
                say(log, "epoch " + std::to_string(e) + " loss " + fmt_double(loss) + " acc " + fmt_double(acc));
            });
            result.train_loss = tr.epoch_loss;
            training["epoch_loss"] = tr.epoch_loss;
            training["epoch_accuracy"] = tr.epoch_accuracy;
            nn::save_checkpoint(model, out / "model");

            const auto feats = nn::extract_features(model, data, config.feature_batch);
            std::vector<FeatureRow> rows_out;
            std::vector<svm::Vector> x;
            std::vector<int> y;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                const auto& rec = train_index.rows[i];
                svm_sources.insert(rec.source_image_id);
                x.emplace_back(feats[i].begin(), feats[i].end());
                y.push_back(data.labels[i]);
                rows_out.push_back({rec.device_id, rec.source_image_id, x.back()});
            }
            save_features_csv(rows_out, out / "features_train.csv");
            say(log, "training svm");
            classifier = svm::svm_train(x, y, config.svm);
            svm::save_svm(classifier, out / "svm.model");
        });
    }

    // Test features and predictions, in chunks to bound memory.
    std::vector<FeatureRow> test_rows;
    std::vector<std::pair<int, int>> preds;
    std::vector<VoteInput> votes;
    stage("classify", out, [&] {
        std::ofstream pred_out(out / "predictions.csv", std::ios::trunc);
        if (!pred_out) throw IoError("cannot write predictions.csv");
        pred_out << "source_image_id,patch_index,true_device,predicted_device\n";
        const std::size_t chunk = 64;
        for (std::size_t start = 0; start < test_index.rows.size(); start += chunk) {
            std::vector<std::size_t> rows;
            for (std::size_t k = start; k < std::min(start + chunk, test_index.rows.size()); ++k) rows.push_back(k);
            const nn::Dataset data = load_patch_dataset(test_index, rows, devices);
            const auto feats = nn::extract_features(model, data, config.feature_batch);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& rec = test_index.rows[rows[i]];
                svm::Vector f(feats[i].begin(), feats[i].end());
                const int truth = data.labels[i];
                const int pred = svm::svm_predict(classifier, f).label;
                preds.emplace_back(truth, pred);
                votes.push_back({rec.source_image_id, truth, pred});
                pred_out << rec.source_image_id << "," << rec.patch_index << "," << rec.device_id << ","
                         << devices[static_cast<std::size_t>(pred)] << "\n";
                test_rows.push_back({rec.device_id, rec.source_image_id, std::move(f)});
            }
        }
        save_features_csv(test_rows, out / "features_test.csv");
    });

    // Leakage audit.
    std::set<std::string> test_sources;
    for (const auto& r : test_index.rows) test_sources.insert(r.source_image_id);
    std::size_t overlap_train = 0, overlap_svm = 0;
    for (const auto& s : test_sources) {
        overlap_train += train_sources.count(s);
        overlap_svm += svm_sources.count(s);
    }
    if (overlap_train || overlap_svm) {
        throw StageError("leakage-audit", "leakage audit failed: " + std::to_string(overlap_train) +
                                              " test images contributed training patches and " +
                                              std::to_string(overlap_svm) + " contributed SVM training features");
    }

    ojson report;
    stage("report", out, [&] {
        result.patch_report = evaluate(preds, devices.size());
        result.image_report = evaluate(majority_vote(votes), devices.size());
        if (test_rows.size() >= 3) {
            std::vector<std::vector<double>> f;
            for (const auto& r : test_rows) f.push_back(r.values);
            const Embedding emb = pca_embed(f, 2);
            std::ofstream e(out / "embedding.csv", std::ios::trunc);
            e << "device_id,source_image_id,pc1,pc2\n";
            for (std::size_t i = 0; i < test_rows.size(); ++i)
                e << test_rows[i].device_id << "," << test_rows[i].source_image_id << "," << fmt_double(emb.points[i][0])
                  << "," << fmt_double(emb.points[i][1]) << "\n";
        }
        ojson cfg = to_json(config);
        for (const char* k : {"out_dir", "jobs", "keep_patches", "feature_batch"}) cfg.erase(k);
        if (cfg.contains("simulate") && cfg["simulate"].is_object()) cfg["simulate"].erase("jobs");
        report["config"] = cfg;
        report["dataset"] = {{"devices", devices},
                             {"images", manifest.rows.size()},
                             {"train_images", std::count_if(manifest.rows.begin(), manifest.rows.end(),
                                                            [](const auto& r) { return r.split == Split::train; })},
                             {"test_images", std::count_if(manifest.rows.begin(), manifest.rows.end(),
                                                           [](const auto& r) { return r.split == Split::test; })}};
        report["mode"] = sampling::to_string(config.mode);
        report["manipulation"] = config.manip ? ojson(config.manip->label()) : ojson(nullptr);
        ojson audit;
        audit["enabled"] = config.audit.enabled;
        audit["threshold"] = config.audit.threshold;
        audit["images"] = ojson::array();
        double max_pce = 0;
        for (const auto& a : result.audit) {
            audit["images"].push_back({{"image", a.image}, {"device_id", a.device_id}, {"pce", a.pce}});
            max_pce = std::max(max_pce, a.pce);
        }
        audit["max_pce"] = max_pce;
        audit["passed"] = true;
        report["prnu_free_audit"] = audit;
        report["leakage_audit"] = {{"train_source_images", train_sources.size()},
                                   {"svm_source_images", svm_sources.size()},
                                   {"test_source_images", test_sources.size()},
                                   {"overlap", 0},
                                   {"passed", true}};
        report["training"] = training;
        ojson sv;
        sv["C"] = classifier.C;
        sv["gamma"] = classifier.gamma;
        sv["support_vectors"] = ojson::array();
        for (const auto& p : classifier.pairs) sv["support_vectors"].push_back(p.support.size());
        report["svm"] = sv;
        report["patches"] = {{"train", result.train_patches}, {"test", result.test_patches}};
        report["patch_level"] = to_json(result.patch_report, devices);
        report["image_level_majority_vote"] = to_json(result.image_report, devices);
        report["artifacts"] = {{"manifest", "manifest.jsonl"},
                               {"patch_index", "patches/index.jsonl"},
                               {"model", config.pretrained ? (*config.pretrained / "model").string() : "model"},
                               {"svm", config.pretrained ? (*config.pretrained / "svm.model").string() : "svm.model"},
                               {"features_train", config.pretrained ? ojson(nullptr) : ojson("features_train.csv")},
                               {"features_test", "features_test.csv"},
                               {"predictions", "predictions.csv"},
                               {"embedding", "embedding.csv"}};
        write_json_file(out / "report.json", report);
    });

    if (!config.keep_patches) {
        for (const char* sub : {"train", "test"})
            for (const auto& d : devices) fs::remove_all(patch_dir / sub / d, ec);
    }
    result.report_path = out / "report.json";
    result.report = std::move(report);
    say(log, "patch accuracy " + fmt_double(result.patch_report.accuracy) + "%");
    return result;
}

}  // namespace camfp::eval

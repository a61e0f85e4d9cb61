#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "camfp/common/error.hpp"
#include "camfp/eval/experiment.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
using namespace camfp;

namespace {

void log_line(const std::string& s) { std::cerr << s << std::endl; }

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DecodeError(p.string() + ": " + e.what());
    }
}

void write_json(const ojson& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out);
    f << j.dump(2) << "\n";
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

int label_of(const std::vector<std::string>& classes, const std::string& id) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), id);
    if (it == classes.end() || *it != id) throw DataError("unknown device id '" + id + "'");
    return static_cast<int>(it - classes.begin());
}

fs::path labels_sidecar(const fs::path& svm_file) { return fs::path(svm_file).concat(".labels.json"); }

// `a.b.c=value` into a JSON object; value parsed as JSON when possible.
void apply_override(json& j, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ArgumentError("--set expects key=value, got '" + text + "'");
    const std::string key = text.substr(0, eq), raw = text.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        json& next = (*node)[parts[i]];
        if (next.is_null()) next = json::object();
        node = &next;
    }
    (*node)[parts.back()] = value;
}

struct Prediction {
    std::string source, truth, predicted;
    std::size_t patch_index = 0;
};

std::vector<Prediction> read_predictions(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::string line;
    std::getline(in, line);
    if (line != "source_image_id,patch_index,true_device,predicted_device")
        throw DecodeError("predictions csv: unexpected header in " + p.string());
    std::vector<Prediction> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        Prediction r;
        std::string idx;
        std::getline(ss, r.source, ',');
        std::getline(ss, idx, ',');
        std::getline(ss, r.truth, ',');
        std::getline(ss, r.predicted, ',');
        if (r.predicted.empty()) throw DecodeError("predictions csv: short row in " + p.string());
        r.patch_index = std::stoul(idx);
        out.push_back(std::move(r));
    }
    return out;
}

nn::Dataset dataset_from_index(const sampling::PatchIndex& index, const std::vector<std::size_t>& rows,
                               const std::vector<std::string>& classes) {
    return eval::load_patch_dataset(index, rows, classes);
}

std::vector<std::size_t> rows_of_split(const sampling::PatchIndex& index, const std::string& split) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < index.rows.size(); ++i)
        if (split == "all" || eval::to_string(index.rows[i].split) == split) rows.push_back(i);
    if (rows.empty()) throw DataError("no patches with split '" + split + "'");
    return rows;
}

std::vector<std::string> index_devices(const sampling::PatchIndex& index) {
    std::vector<std::string> d;
    for (const auto& r : index.rows) d.push_back(r.device_id);
    return sorted_unique(std::move(d));
}

std::vector<fs::path> image_files(const fs::path& in) {
    if (!fs::is_directory(in)) return {in};
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Camera device identification toolkit: PRNU matching, PRNU-free patch sampling, CNN + SVM."};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Render a synthetic multi-device dataset");
    std::string sim_out, sim_config;
    sim::SimulationConfig sc;
    std::optional<int> sim_jpeg;
    sim_cmd->add_option("--out", sim_out, "Output directory")->required();
    sim_cmd->add_option("--config", sim_config, "JSON simulation config (flags override it)");
    auto* o_models = sim_cmd->add_option("--models", sc.n_models, "Number of camera models");
    auto* o_dpm = sim_cmd->add_option("--devices-per-model", sc.devices_per_model, "Devices per model");
    auto* o_ipd = sim_cmd->add_option("--images", sc.images_per_device, "Images per device");
    auto* o_seed = sim_cmd->add_option("--seed", sc.seed, "Simulation seed");
    auto* o_h = sim_cmd->add_option("--height", sc.device.height, "Image height");
    auto* o_w = sim_cmd->add_option("--width", sc.device.width, "Image width");
    auto* o_fr = sim_cmd->add_option("--train-fraction", sc.train_fraction, "Per-device train fraction");
    sim_cmd->add_option("--jpeg-q", sim_jpeg, "Store captures as JPEG round-trips at this quality");
    std::size_t sim_jobs = 1;
    sim_cmd->add_option("--jobs", sim_jobs, "Worker threads (0 = all cores)");

    // fingerprint-build
    auto* fp_cmd = app.add_subcommand("fingerprint-build", "Build reference PRNU fingerprints per device");
    std::string fp_manifest, fp_out, fp_device, fp_split = "train", fp_kind = "natural";
    std::size_t fp_n = 20;
    fp_cmd->add_option("--manifest", fp_manifest, "Dataset manifest (jsonl)")->required();
    fp_cmd->add_option("--out", fp_out, "Output directory for <device>.cftr/.json")->required();
    fp_cmd->add_option("--device", fp_device, "Only this device (default: all)");
    fp_cmd->add_option("--images", fp_n, "Images per reference (first N by path)");
    fp_cmd->add_option("--split", fp_split, "Split to draw from: train|test|all")
        ->check(CLI::IsMember({"train", "test", "all"}));
    fp_cmd->add_option("--kind", fp_kind, "natural|flat")->check(CLI::IsMember({"natural", "flat"}));

    // pce
    auto* pce_cmd = app.add_subcommand("pce", "Match images against a reference fingerprint");
    std::string pce_fp, pce_out;
    std::vector<std::string> pce_images;
    bool pce_down = false;
    std::size_t pce_radius = 5;
    double pce_threshold = prnu::kPceThreshold;
    pce_cmd->add_option("--fingerprint", pce_fp, "Fingerprint stem (without extension)")->required();
    pce_cmd->add_option("images", pce_images, "Image files or directories")->required();
    pce_cmd->add_flag("--downsampled", pce_down, "Evaluate through the 224x224 down/up path");
    pce_cmd->add_option("--exclude-radius", pce_radius, "Peak exclusion radius");
    pce_cmd->add_option("--threshold", pce_threshold, "Decision threshold");
    pce_cmd->add_option("--out", pce_out, "JSON report (default stdout)");

    // patches
    auto* pat_cmd = app.add_subcommand("patches", "Sample 224x224 patches from a split manifest");
    std::string pat_manifest, pat_out, pat_mode = "down", pat_split = "all", pat_manip;
    sampling::PatchJob pj;
    pat_cmd->add_option("--manifest", pat_manifest, "Dataset manifest (jsonl)")->required();
    pat_cmd->add_option("--out", pat_out, "Output directory")->required();
    pat_cmd->add_option("--mode", pat_mode, "down|random_orig|random_down")
        ->check(CLI::IsMember({"down", "random_orig", "random_down"}));
    pat_cmd->add_option("--per-image", pj.plan.patches_per_image, "Patches per image (random modes)");
    pat_cmd->add_option("--seed", pj.plan.seed, "Sampling seed");
    pat_cmd->add_option("--split", pat_split, "train|test|all")->check(CLI::IsMember({"train", "test", "all"}));
    pat_cmd->add_option("--manip", pat_manip, "Manipulation applied first, e.g. jpeg=50");
    pat_cmd->add_option("--jobs", pj.jobs, "Worker threads (0 = all cores)");

    // train
    auto* tr_cmd = app.add_subcommand("train", "Train the residual network on a patch index");
    std::string tr_index, tr_out, tr_split = "train";
    nn::TrainConfig tc;
    nn::MiniResNetConfig net;
    tr_cmd->add_option("--patches", tr_index, "Patch index (jsonl)")->required();
    tr_cmd->add_option("--out", tr_out, "Checkpoint directory")->required();
    tr_cmd->add_option("--split", tr_split, "Patch split to train on")->check(CLI::IsMember({"train", "test", "all"}));
    tr_cmd->add_option("--epochs", tc.epochs, "Epochs");
    tr_cmd->add_option("--batch", tc.batch_size, "Batch size");
    tr_cmd->add_option("--lr", tc.learning_rate, "Adam learning rate");
    tr_cmd->add_option("--seed", tc.seed, "Initialisation and shuffle seed");
    tr_cmd->add_option("--stages", net.stage_channels, "Channels per stage");
    tr_cmd->add_option("--blocks", net.blocks_per_stage, "Residual blocks per stage");

    // features
    auto* ft_cmd = app.add_subcommand("features", "Extract GAP features for patches");
    std::string ft_model, ft_index, ft_out, ft_split = "all";
    std::size_t ft_batch = 16;
    ft_cmd->add_option("--model", ft_model, "Checkpoint directory")->required();
    ft_cmd->add_option("--patches", ft_index, "Patch index (jsonl)")->required();
    ft_cmd->add_option("--out", ft_out, "Features CSV")->required();
    ft_cmd->add_option("--split", ft_split, "train|test|all")->check(CLI::IsMember({"train", "test", "all"}));
    ft_cmd->add_option("--batch", ft_batch, "Inference batch size");

    // svm-train
    auto* sv_cmd = app.add_subcommand("svm-train", "Train the one-vs-one RBF SVM on a features CSV");
    std::string sv_features, sv_out;
    svm::SvmParams sp;
    std::optional<double> sv_gamma;
    sv_cmd->add_option("--features", sv_features, "Features CSV")->required();
    sv_cmd->add_option("--out", sv_out, "Model file")->required();
    sv_cmd->add_option("--C", sp.C, "Box constraint");
    sv_cmd->add_option("--gamma", sv_gamma, "RBF gamma (default: 1 / (dim * var))");
    sv_cmd->add_option("--tol", sp.tol, "KKT tolerance");

    // classify
    auto* cl_cmd = app.add_subcommand("classify", "Predict devices for a features CSV");
    std::string cl_svm, cl_features, cl_out;
    cl_cmd->add_option("--svm", cl_svm, "Model file")->required();
    cl_cmd->add_option("--features", cl_features, "Features CSV")->required();
    cl_cmd->add_option("--out", cl_out, "Predictions CSV")->required();

    // evaluate
    auto* ev_cmd = app.add_subcommand("evaluate", "Accuracy and normalized confusion matrix");
    std::string ev_pred, ev_out;
    ev_cmd->add_option("--predictions", ev_pred, "Predictions CSV")->required();
    ev_cmd->add_option("--out", ev_out, "JSON report (default stdout)");

    // manip
    auto* mp_cmd = app.add_subcommand("manip", "Apply gamma, rotation or JPEG to images");
    std::string mp_op, mp_in, mp_out;
    double mp_param = 0;
    mp_cmd->add_option("--op", mp_op, "gamma|rotate|jpeg")->required()->check(CLI::IsMember({"gamma", "rotate", "jpeg"}));
    mp_cmd->add_option("--param", mp_param, "Gamma, degrees, or JPEG quality")->required();
    mp_cmd->add_option("--in", mp_in, "Input file or directory")->required();
    mp_cmd->add_option("--out", mp_out, "Output file or directory")->required();

    // embed
    auto* em_cmd = app.add_subcommand("embed", "2-D PCA embedding of a features CSV");
    std::string em_features, em_out;
    std::size_t em_dims = 2;
    em_cmd->add_option("--features", em_features, "Features CSV")->required();
    em_cmd->add_option("--out", em_out, "Embedding CSV")->required();
    em_cmd->add_option("--dims", em_dims, "Output dimensions");

    // run
    auto* run_cmd = app.add_subcommand("run", "Full experiment from one JSON config");
    std::string run_config;
    std::vector<std::string> run_sets;
    std::optional<std::string> run_out, run_mode, run_manip, run_pretrained, run_dataset;
    std::optional<std::size_t> run_jobs, run_epochs, run_ppi;
    run_cmd->add_option("--config", run_config, "Experiment config (JSON)")->required();
    run_cmd->add_option("--out-dir", run_out, "Override out_dir");
    run_cmd->add_option("--dataset", run_dataset, "Override dataset");
    run_cmd->add_option("--mode", run_mode, "Override sampling mode");
    run_cmd->add_option("--manip", run_manip, "Override test-side manipulation, e.g. rotate=90");
    run_cmd->add_option("--pretrained", run_pretrained, "Reuse model and SVM from an earlier run directory");
    run_cmd->add_option("--jobs", run_jobs, "Worker threads (0 = all cores)");
    run_cmd->add_option("--epochs", run_epochs, "Override train.epochs");
    run_cmd->add_option("--patches-per-image", run_ppi, "Override patches_per_image");
    run_cmd->add_option("--set", run_sets, "Override any config key: dotted.key=json-value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim_cmd) {
            sim::SimulationConfig cfg = sim_config.empty() ? sim::SimulationConfig{}
                                                           : eval::simulation_config_from_json(read_json(sim_config));
            if (*o_models) cfg.n_models = sc.n_models;
            if (*o_dpm) cfg.devices_per_model = sc.devices_per_model;
            if (*o_ipd) cfg.images_per_device = sc.images_per_device;
            if (*o_seed) cfg.seed = sc.seed;
            if (*o_h) cfg.device.height = sc.device.height;
            if (*o_w) cfg.device.width = sc.device.width;
            if (*o_fr) cfg.train_fraction = sc.train_fraction;
            if (sim_jpeg) cfg.jpeg_q = sim_jpeg;
            cfg.jobs = sim_jobs;
            const auto m = sim::simulate_dataset(cfg, sim_out);
            log_line("wrote " + std::to_string(m.rows.size()) + " images for " + std::to_string(m.device_count()) +
                     " devices to " + sim_out);
        } else if (*fp_cmd) {
            const auto m = eval::load_manifest(fp_manifest);
            fs::create_directories(fp_out);
            for (const auto& dev : m.devices()) {
                if (!fp_device.empty() && dev != fp_device) continue;
                std::vector<const eval::ManifestRow*> rows;
                for (const auto& r : m.rows)
                    if (r.device_id == dev && (fp_split == "all" || eval::to_string(r.split) == fp_split))
                        rows.push_back(&r);
                std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->path < b->path; });
                if (rows.size() < fp_n)
                    throw DataError(dev + ": only " + std::to_string(rows.size()) + " images available");
                std::vector<prnu::NoiseResidual> res;
                for (std::size_t k = 0; k < fp_n; ++k)
                    res.push_back(prnu::extract_residual(img::load_image(m.resolve(*rows[k])), {}, rows[k]->path));
                const auto ref = prnu::build_reference(res, dev, prnu::fingerprint_kind_from_string(fp_kind));
                prnu::save_fingerprint(ref, fs::path(fp_out) / dev);
                log_line("fingerprint " + dev + " from " + std::to_string(fp_n) + " images");
            }
        } else if (*pce_cmd) {
            const auto ref = prnu::load_fingerprint(pce_fp);
            prnu::PipelineParams pp;
            pp.exclude_radius = pce_radius;
            pp.threshold = pce_threshold;
            ojson out = ojson::array();
            for (const auto& in : pce_images)
                for (const auto& f : image_files(in)) {
                    const auto im = img::load_image(f);
                    const auto rep = pce_down ? prnu::pce_pipeline_downsampled(im, ref, pp)
                                              : prnu::pce_pipeline_direct(im, ref, pp);
                    out.push_back({{"image", f.string()},
                                   {"device_id", ref.device_id},
                                   {"pce", rep.pce},
                                   {"peak", {rep.peak_row, rep.peak_col}},
                                   {"matched", rep.matched},
                                   {"threshold", rep.threshold}});
                }
            write_json(out, pce_out);
        } else if (*pat_cmd) {
            const auto m = eval::load_manifest(pat_manifest);
            pj.plan.mode = sampling::sampling_mode_from_string(pat_mode);
            pj.only_split = pat_split == "all" ? eval::Split::unassigned : eval::split_from_string(pat_split);
            if (!pat_manip.empty()) {
                const auto spec = manip::ManipSpec::parse(pat_manip);
                pj.transform = [spec](const img::Image& im, const eval::ManifestRow&) { return manip::apply(im, spec); };
            }
            const auto idx = sampling::build_patch_dataset(m, pj, pat_out);
            log_line("wrote " + std::to_string(idx.rows.size()) + " patches to " + pat_out);
        } else if (*tr_cmd) {
            const auto index = sampling::load_patch_index(tr_index);
            const auto classes = index_devices(index);
            const auto data = dataset_from_index(index, rows_of_split(index, tr_split), classes);
            net.in_channels = data.channels;
            net.num_classes = classes.size();
            nn::MiniResNet<float> model(net, tc.seed);
            nn::train(model, data, tc, [](std::size_t e, double loss, double acc) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "epoch %zu loss %.5f acc %.4f", e, loss, acc);
                log_line(buf);
            });
            nn::save_checkpoint(model, tr_out);
            write_json(ojson(classes), (fs::path(tr_out) / "classes.json").string());
        } else if (*ft_cmd) {
            auto model = nn::load_checkpoint(ft_model);
            const auto index = sampling::load_patch_index(ft_index);
            const auto classes = index_devices(index);
            const auto rows = rows_of_split(index, ft_split);
            std::vector<eval::FeatureRow> out;
            for (std::size_t s = 0; s < rows.size(); s += 64) {
                std::vector<std::size_t> chunk(rows.begin() + static_cast<long>(s),
                                               rows.begin() + static_cast<long>(std::min(s + 64, rows.size())));
                const auto feats = nn::extract_features(model, dataset_from_index(index, chunk, classes), ft_batch);
                for (std::size_t i = 0; i < chunk.size(); ++i) {
                    const auto& r = index.rows[chunk[i]];
                    out.push_back({r.device_id, r.source_image_id, {feats[i].begin(), feats[i].end()}});
                }
            }
            eval::save_features_csv(out, ft_out);
            log_line("wrote " + std::to_string(out.size()) + " feature rows to " + ft_out);
        } else if (*sv_cmd) {
            const auto rows = eval::load_features_csv(sv_features);
            std::vector<std::string> names;
            for (const auto& r : rows) names.push_back(r.device_id);
            const auto classes = sorted_unique(names);
            std::vector<svm::Vector> x;
            std::vector<int> y;
            for (const auto& r : rows) {
                x.push_back(r.values);
                y.push_back(label_of(classes, r.device_id));
            }
            sp.gamma = sv_gamma;
            const auto model = svm::svm_train(x, y, sp);
            svm::save_svm(model, sv_out);
            write_json(ojson(classes), labels_sidecar(sv_out).string());
            log_line("trained " + std::to_string(model.pairs.size()) + " binary machines, gamma " +
                     std::to_string(model.gamma));
        } else if (*cl_cmd) {
            const auto model = svm::load_svm(cl_svm);
            const auto classes = read_json(labels_sidecar(cl_svm)).get<std::vector<std::string>>();
            const auto rows = eval::load_features_csv(cl_features);
            std::ofstream out(cl_out, std::ios::trunc);
            if (!out) throw IoError("cannot write " + cl_out);
            out << "source_image_id,patch_index,true_device,predicted_device\n";
            std::map<std::string, std::size_t> counter;
            for (const auto& r : rows) {
                const auto p = svm::svm_predict(model, r.values);
                out << r.source_image_id << "," << counter[r.source_image_id]++ << "," << r.device_id << ","
                    << classes.at(static_cast<std::size_t>(p.label)) << "\n";
            }
        } else if (*ev_cmd) {
            const auto preds = read_predictions(ev_pred);
            if (preds.empty()) throw ArgumentError("evaluate: no predictions");
            std::vector<std::string> names;
            for (const auto& p : preds) {
                names.push_back(p.truth);
                names.push_back(p.predicted);
            }
            const auto classes = sorted_unique(names);
            std::vector<std::pair<int, int>> pairs;
            std::vector<eval::VoteInput> votes;
            for (const auto& p : preds) {
                const int t = label_of(classes, p.truth), q = label_of(classes, p.predicted);
                pairs.emplace_back(t, q);
                votes.push_back({p.source, t, q});
            }
            ojson rep;
            rep["patch_level"] = eval::to_json(eval::evaluate(pairs, classes.size()), classes);
            rep["image_level_majority_vote"] =
                eval::to_json(eval::evaluate(eval::majority_vote(votes), classes.size()), classes);
            write_json(rep, ev_out);
        } else if (*mp_cmd) {
            manip::ManipSpec spec{manip::manip_op_from_string(mp_op), mp_param};
            spec.validate();
            const fs::path in(mp_in), out(mp_out);
            if (fs::is_directory(in)) {
                for (const auto& f : image_files(in)) {
                    const fs::path dst = out / fs::relative(f, in);
                    fs::create_directories(dst.parent_path());
                    img::save_image(manip::apply(img::load_image(f), spec), dst);
                }
            } else {
                img::save_image(manip::apply(img::load_image(in), spec), out);
            }
        } else if (*em_cmd) {
            const auto rows = eval::load_features_csv(em_features);
            std::vector<std::vector<double>> f;
            for (const auto& r : rows) f.push_back(r.values);
            const auto emb = eval::pca_embed(f, em_dims);
            if (emb.degenerate) log_line("warning: degenerate features, embedding is all zeros");
            std::ofstream out(em_out, std::ios::trunc);
            if (!out) throw IoError("cannot write " + em_out);
            out << "device_id,source_image_id";
            for (std::size_t d = 0; d < em_dims; ++d) out << ",pc" << d + 1;
            out << "\n";
            char buf[32];
            for (std::size_t i = 0; i < rows.size(); ++i) {
                out << rows[i].device_id << "," << rows[i].source_image_id;
                for (double v : emb.points[i]) {
                    std::snprintf(buf, sizeof buf, "%.9g", v);
                    out << "," << buf;
                }
                out << "\n";
            }
        } else if (*run_cmd) {
            json j = read_json(run_config);
            if (run_out) j["out_dir"] = *run_out;
            if (run_dataset) j["dataset"] = *run_dataset;
            if (run_mode) j["mode"] = *run_mode;
            if (run_manip) j["manip"] = *run_manip;
            if (run_pretrained) j["pretrained"] = *run_pretrained;
            if (run_jobs) j["jobs"] = *run_jobs;
            if (run_epochs) j["train"]["epochs"] = *run_epochs;
            if (run_ppi) j["patches_per_image"] = *run_ppi;
            for (const auto& s : run_sets) apply_override(j, s);
            const auto cfg = eval::experiment_config_from_json(j);
            const auto res = eval::run_experiment(cfg, log_line);
            std::printf("patch accuracy %.2f%%  image accuracy %.2f%%  report %s\n", res.patch_report.accuracy,
                        res.image_report.accuracy, res.report_path.string().c_str());
        }
    } catch (const StageError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

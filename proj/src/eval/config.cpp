#include <algorithm>

#include "camfp/common/error.hpp"
#include "camfp/eval/experiment.hpp"

namespace camfp::eval {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <class T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
    if (!j.is_object()) throw ArgumentError(std::string(where) + ": expected a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* s) { return k == s; })) {
            throw ArgumentError(std::string(where) + ": unknown key '" + k + "'");
        }
    }
}

sim::DeviceOptions device_options_from_json(const json& j) {
    reject_unknown(j, {"height", "width", "prnu_strength", "prnu_cutoff", "noise_sigma", "gain_spread", "gamma_spread",
                       "vignette_strength", "vignette_spread", "vignette_power", "device_offset_scale"},
                   "simulate.device");
    sim::DeviceOptions d;
    read_opt(j, "height", d.height);
    read_opt(j, "width", d.width);
    read_opt(j, "prnu_strength", d.prnu_strength);
    read_opt(j, "prnu_cutoff", d.prnu_cutoff);
    read_opt(j, "noise_sigma", d.noise_sigma);
    read_opt(j, "gain_spread", d.gain_spread);
    read_opt(j, "gamma_spread", d.gamma_spread);
    read_opt(j, "vignette_strength", d.vignette_strength);
    read_opt(j, "vignette_spread", d.vignette_spread);
    read_opt(j, "vignette_power", d.vignette_power);
    read_opt(j, "device_offset_scale", d.device_offset_scale);
    d.validate();
    return d;
}

ojson to_json(const sim::DeviceOptions& d) {
    ojson j;
    j["height"] = d.height;
    j["width"] = d.width;
    j["prnu_strength"] = d.prnu_strength;
    j["prnu_cutoff"] = d.prnu_cutoff;
    j["noise_sigma"] = d.noise_sigma;
    j["gain_spread"] = d.gain_spread;
    j["gamma_spread"] = d.gamma_spread;
    j["vignette_strength"] = d.vignette_strength;
    j["vignette_spread"] = d.vignette_spread;
    j["vignette_power"] = d.vignette_power;
    j["device_offset_scale"] = d.device_offset_scale;
    return j;
}

}  // namespace

sim::SimulationConfig simulation_config_from_json(const json& j) {
    reject_unknown(j, {"n_models", "devices_per_model", "images_per_device", "scene_mix", "jpeg_q", "seed",
                       "train_fraction", "device", "jobs"},
                   "simulate");
    sim::SimulationConfig c;
    read_opt(j, "n_models", c.n_models);
    read_opt(j, "devices_per_model", c.devices_per_model);
    read_opt(j, "images_per_device", c.images_per_device);
    if (j.contains("scene_mix")) {
        c.scene_mix.clear();
        for (const auto& s : j.at("scene_mix")) c.scene_mix.push_back(sim::scene_kind_from_string(s.get<std::string>()));
    }
    if (j.contains("jpeg_q") && !j.at("jpeg_q").is_null()) c.jpeg_q = j.at("jpeg_q").get<int>();
    read_opt(j, "seed", c.seed);
    read_opt(j, "train_fraction", c.train_fraction);
    read_opt(j, "jobs", c.jobs);
    if (j.contains("device")) c.device = device_options_from_json(j.at("device"));
    return c;
}

ojson to_json(const sim::SimulationConfig& c) {
    ojson j;
    j["n_models"] = c.n_models;
    j["devices_per_model"] = c.devices_per_model;
    j["images_per_device"] = c.images_per_device;
    j["scene_mix"] = ojson::array();
    for (auto k : c.scene_mix) j["scene_mix"].push_back(sim::to_string(k));
    j["jpeg_q"] = c.jpeg_q ? ojson(*c.jpeg_q) : ojson(nullptr);
    j["seed"] = c.seed;
    j["train_fraction"] = c.train_fraction;
    j["device"] = to_json(c.device);
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    reject_unknown(j, {"dataset", "simulate", "out_dir", "mode", "patches_per_image", "seeds", "network", "train",
                       "svm", "manip", "audit", "pretrained", "jobs", "keep_patches", "feature_batch"},
                   "config");
    ExperimentConfig c;
    if (!j.contains("dataset")) throw ArgumentError("config: 'dataset' is required");
    if (!j.contains("out_dir")) throw ArgumentError("config: 'out_dir' is required");
    c.dataset = j.at("dataset").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("simulate") && !j.at("simulate").is_null()) c.simulate = simulation_config_from_json(j.at("simulate"));
    if (j.contains("mode")) c.mode = sampling::sampling_mode_from_string(j.at("mode").get<std::string>());
    read_opt(j, "patches_per_image", c.patches_per_image);
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        reject_unknown(s, {"split", "sampling", "train"}, "seeds");
        read_opt(s, "split", c.split_seed);
        read_opt(s, "sampling", c.sampling_seed);
        read_opt(s, "train", c.train_seed);
    }
    if (j.contains("network")) {
        const auto& n = j.at("network");
        reject_unknown(n, {"stem_channels", "stage_channels", "blocks_per_stage", "stem_stride", "stem_pool"}, "network");
        read_opt(n, "stem_channels", c.network.stem_channels);
        read_opt(n, "stage_channels", c.network.stage_channels);
        read_opt(n, "blocks_per_stage", c.network.blocks_per_stage);
        read_opt(n, "stem_stride", c.network.stem_stride);
        read_opt(n, "stem_pool", c.network.stem_pool);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon"}, "train");
        read_opt(t, "epochs", c.train.epochs);
        read_opt(t, "batch_size", c.train.batch_size);
        read_opt(t, "learning_rate", c.train.learning_rate);
        read_opt(t, "beta1", c.train.beta1);
        read_opt(t, "beta2", c.train.beta2);
        read_opt(t, "epsilon", c.train.epsilon);
        c.train.validate();
    }
    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        reject_unknown(s, {"C", "gamma", "tol", "max_iter"}, "svm");
        read_opt(s, "C", c.svm.C);
        if (s.contains("gamma") && s.at("gamma").is_number()) c.svm.gamma = s.at("gamma").get<double>();
        read_opt(s, "tol", c.svm.tol);
        read_opt(s, "max_iter", c.svm.max_iter);
        c.svm.validate();
    }
    if (j.contains("manip") && !j.at("manip").is_null()) c.manip = manip::ManipSpec::parse(j.at("manip").get<std::string>());
    if (j.contains("audit")) {
        const auto& a = j.at("audit");
        reject_unknown(a, {"enabled", "images", "reference_images", "threshold"}, "audit");
        read_opt(a, "enabled", c.audit.enabled);
        read_opt(a, "images", c.audit.images);
        read_opt(a, "reference_images", c.audit.reference_images);
        read_opt(a, "threshold", c.audit.threshold);
    }
    if (j.contains("pretrained") && !j.at("pretrained").is_null()) c.pretrained = j.at("pretrained").get<std::string>();
    read_opt(j, "jobs", c.jobs);
    read_opt(j, "keep_patches", c.keep_patches);
    read_opt(j, "feature_batch", c.feature_batch);
    if (c.patches_per_image == 0) throw ArgumentError("config: patches_per_image must be >= 1");
    if (c.audit.enabled && c.audit.images < 10) throw ArgumentError("config: the PRNU-free audit needs at least 10 images");
    return c;
}

ojson to_json(const ExperimentConfig& c) {
    ojson j;
    j["dataset"] = c.dataset.string();
    j["simulate"] = c.simulate ? to_json(*c.simulate) : ojson(nullptr);
    j["out_dir"] = c.out_dir.string();
    j["mode"] = sampling::to_string(c.mode);
    j["patches_per_image"] = c.patches_per_image;
    j["seeds"] = {{"split", c.split_seed}, {"sampling", c.sampling_seed}, {"train", c.train_seed}};
    ojson n;
    n["stem_channels"] = c.network.stem_channels;
    n["stage_channels"] = c.network.stage_channels;
    n["blocks_per_stage"] = c.network.blocks_per_stage;
    n["stem_stride"] = c.network.stem_stride;
    n["stem_pool"] = c.network.stem_pool;
    j["network"] = n;
    ojson t;
    t["epochs"] = c.train.epochs;
    t["batch_size"] = c.train.batch_size;
    t["learning_rate"] = c.train.learning_rate;
    t["beta1"] = c.train.beta1;
    t["beta2"] = c.train.beta2;
    t["epsilon"] = c.train.epsilon;
    j["train"] = t;
    ojson s;
    s["C"] = c.svm.C;
    s["gamma"] = c.svm.gamma ? ojson(*c.svm.gamma) : ojson("auto");
    s["tol"] = c.svm.tol;
    s["max_iter"] = c.svm.max_iter;
    j["svm"] = s;
    j["manip"] = c.manip ? ojson(c.manip->label()) : ojson(nullptr);
    j["audit"] = {{"enabled", c.audit.enabled},
                  {"images", c.audit.images},
                  {"reference_images", c.audit.reference_images},
                  {"threshold", c.audit.threshold}};
    j["pretrained"] = c.pretrained ? ojson(c.pretrained->string()) : ojson(nullptr);
    j["jobs"] = c.jobs;
    j["keep_patches"] = c.keep_patches;
    j["feature_batch"] = c.feature_batch;
    return j;
}

ojson to_json(const EvalReport& r, const std::vector<std::string>& names) {
    ojson j;
    j["accuracy"] = r.accuracy;
    j["correct"] = r.correct;
    j["total"] = r.total;
    j["classes"] = names;
    j["confusion"] = r.confusion;
    j["counts"] = r.counts;
    ojson per = ojson::object();
    for (std::size_t i = 0; i < names.size() && i < r.per_class_accuracy.size(); ++i) {
        per[names[i]] = {{"accuracy", r.per_class_accuracy[i]}, {"support", r.support[i]}};
    }
    j["per_device"] = per;
    return j;
}

}  // namespace camfp::eval

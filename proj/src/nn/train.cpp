#include <cmath>
#include <fstream>
#include <numeric>

#include "camfp/common/rng.hpp"
#include "camfp/common/tensor_file.hpp"
#include "camfp/nn/model.hpp"
#include "json.hpp"

namespace camfp::nn {

template <class T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> indices) {
    const std::size_t H = data.height, W = data.width, C = data.channels;
    Tensor<T> x({indices.size(), C, H, W});
    for (std::size_t n = 0; n < indices.size(); ++n) {
        const auto& src = data.images.at(indices[n]);
        if (src.size() != H * W * C) throw ShapeError("make_batch: sample " + std::to_string(indices[n]) + " has wrong size");
        T* dst = x.data.data() + n * C * H * W;
        for (std::size_t i = 0; i < H * W; ++i)
            for (std::size_t c = 0; c < C; ++c) dst[c * H * W + i] = static_cast<T>(src[i * C + c]);
    }
    return x;
}

template Tensor<float> make_batch(const Dataset&, std::span<const std::size_t>);
template Tensor<double> make_batch(const Dataset&, std::span<const std::size_t>);

TrainResult train(MiniResNet<float>& model, const Dataset& data, const TrainConfig& cfg,
                  const TrainProgress& progress) {
    cfg.validate();
    if (data.size() == 0) throw ArgumentError("train: empty dataset");
    if (data.labels.size() != data.size()) throw DataError("train: label count does not match sample count");
    const std::size_t D = model.config().num_classes;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= D) {
            throw DataError("train: label " + std::to_string(data.labels[i]) + " of sample " + std::to_string(i) +
                            " outside [0, " + std::to_string(D) + ")");
        }
    }
    auto params = model.parameters();
    AdamState<float> state;
    std::size_t t = 0;
    TrainResult result;
    std::vector<std::size_t> order(data.size());
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        CounterRng rng(derive_seed(cfg.seed, fnv1a64("epoch"), epoch));
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> idx(order.data() + start, n);
            labels.clear();
            for (auto i : idx) labels.push_back(data.labels[i]);
            const Tensor<float> x = make_batch<float>(data, idx);
            model.zero_grad();
            const Tensor<float> logits = model.forward(x, true);
            const Tensor<float> p = softmax(logits);
            const Tensor<float> y = one_hot<float>(labels, D);
            const double loss = cross_entropy(p, y);
            if (!std::isfinite(loss)) throw DataError("train: non-finite loss at epoch " + std::to_string(epoch + 1));
            loss_sum += loss * static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) {
                const float* row = p.data.data() + r * D;
                if (static_cast<int>(std::max_element(row, row + D) - row) == labels[r]) ++correct;
            }
            model.backward(softmax_cross_entropy_grad(p, y));
            adam_step(params, state, ++t, cfg);
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
        result.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
        if (progress) progress(epoch + 1, result.epoch_loss.back(), result.epoch_accuracy.back());
    }
    return result;
}

std::vector<std::vector<float>> extract_features(MiniResNet<float>& model, const Dataset& data,
                                                 std::size_t batch_size) {
    if (batch_size == 0) throw ArgumentError("extract_features: batch_size must be >= 1");
    std::vector<std::vector<float>> out;
    out.reserve(data.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(start + batch_size, data.size()); ++i) idx.push_back(i);
        const Tensor<float> f = model.features(make_batch<float>(data, idx));
        const std::size_t F = f.dim(1);
        for (std::size_t n = 0; n < idx.size(); ++n)
            out.emplace_back(f.data.begin() + static_cast<long>(n * F), f.data.begin() + static_cast<long>((n + 1) * F));
    }
    return out;
}

namespace {

nlohmann::ordered_json config_json(const MiniResNetConfig& c) {
    nlohmann::ordered_json j;
    j["in_channels"] = c.in_channels;
    j["stem_channels"] = c.stem_channels;
    j["stage_channels"] = c.stage_channels;
    j["blocks_per_stage"] = c.blocks_per_stage;
    j["num_classes"] = c.num_classes;
    j["stem_stride"] = c.stem_stride;
    j["stem_pool"] = c.stem_pool;
    j["feature_dim"] = c.feature_dim();
    return j;
}

MiniResNetConfig config_from_json(const nlohmann::json& j) {
    MiniResNetConfig c;
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.stem_channels = j.at("stem_channels").get<std::size_t>();
    c.stage_channels = j.at("stage_channels").get<std::vector<std::size_t>>();
    c.blocks_per_stage = j.at("blocks_per_stage").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    c.stem_stride = j.value("stem_stride", std::size_t{2});
    c.stem_pool = j.value("stem_pool", true);
    return c;
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(p.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << j.dump(2) << "\n";
}

}  // namespace

void save_checkpoint(MiniResNet<float>& model, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "params", ec);
    if (ec) throw IoError("cannot create " + (dir / "params").string() + ": " + ec.message());
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const auto& p : model.parameters()) {
        const std::string file = "params/" + p.name + ".cftr";
        std::vector<std::uint64_t> shape(p.tensor->shape.begin(), p.tensor->shape.end());
        save_tensor(dir / file, shape, std::span<const float>(p.tensor->data));
        nlohmann::ordered_json e;
        e["name"] = p.name;
        e["shape"] = p.tensor->shape;
        e["role"] = to_string(p.role);
        e["file"] = file;
        index.push_back(e);
    }
    write_json(dir / "index.json", index);
    write_json(dir / "config.json", config_json(model.config()));
}

MiniResNet<float> load_checkpoint(const std::filesystem::path& dir) {
    MiniResNet<float> model(config_from_json(read_json(dir / "config.json")), 0);
    const auto index = read_json(dir / "index.json");
    auto params = model.parameters();
    if (index.size() != params.size()) throw DataError("checkpoint index does not match the configured network");
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& e = index[k];
        if (e.at("name").get<std::string>() != params[k].name)
            throw DataError("checkpoint parameter order mismatch at " + params[k].name);
        const StoredTensor t = load_tensor(dir / e.at("file").get<std::string>());
        std::vector<std::size_t> shape(t.shape.begin(), t.shape.end());
        if (shape != params[k].tensor->shape)
            throw ShapeError("checkpoint tensor " + params[k].name + " has shape " + shape_string(shape) +
                             ", expected " + shape_string(params[k].tensor->shape));
        params[k].tensor->data = t.as_float();
    }
    return model;
}

}  // namespace camfp::nn

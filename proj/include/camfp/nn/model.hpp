#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "camfp/nn/ops.hpp"

namespace camfp::nn {

enum class ParamRole { weight, bias, bn_scale, bn_shift, running_mean, running_var };

std::string to_string(ParamRole role);
ParamRole param_role_from_string(const std::string& s);

template <class T>
struct NamedParam {
    std::string name;
    Tensor<T>* tensor;
    ParamRole role;
    bool trainable() const { return role != ParamRole::running_mean && role != ParamRole::running_var; }
};

template <class T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t stride, std::size_t pad);

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& dy);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);

    Tensor<T> weight, bias;
    std::size_t stride = 1, pad = 0;

private:
    Tensor<T> x_;
};

template <class T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(std::size_t channels);

    Tensor<T> forward(const Tensor<T>& x, bool train);
    Tensor<T> backward(const Tensor<T>& dy);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);

    Tensor<T> gamma, beta, running_mean, running_var;
    T momentum = T(0.9);
    T eps = T(1e-5);

private:
    BatchNormCache<T> cache_;
};

/// relu(bn2(conv2(relu(bn1(conv1(x))))) + shortcut(x)); the shortcut is a
/// 1x1 strided conv + norm when the shape changes, identity otherwise.
template <class T>
class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(std::size_t in_c, std::size_t out_c, std::size_t stride);

    Tensor<T> forward(const Tensor<T>& x, bool train);
    Tensor<T> backward(const Tensor<T>& dy);
    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out);
    bool has_projection() const { return projection_; }

    Conv2d<T> conv1, conv2, proj;
    BatchNorm2d<T> bn1, bn2, proj_bn;

private:
    bool projection_ = false;
    Tensor<T> r1_, out_;
};

struct MiniResNetConfig {
    std::size_t in_channels = 3;
    std::size_t stem_channels = 16;
    std::vector<std::size_t> stage_channels{16, 32, 64};
    std::size_t blocks_per_stage = 2;
    std::size_t num_classes = 2;
    /// Stride of the 3x3 stem conv; a 2x2 average pool follows when stem_pool is set.
    std::size_t stem_stride = 2;
    bool stem_pool = true;

    std::size_t feature_dim() const { return stage_channels.empty() ? 0 : stage_channels.back(); }
    void validate() const;
};

template <class T>
class MiniResNet {
public:
    MiniResNet() = default;
    /// Parameters are drawn from fan-in scaled Gaussians keyed by (seed, name).
    MiniResNet(const MiniResNetConfig& config, std::uint64_t seed);

    /// N x C x H x W -> N x num_classes logits.
    Tensor<T> forward(const Tensor<T>& x, bool train);
    /// N x C x H x W -> N x feature_dim GAP output in inference mode.
    Tensor<T> features(const Tensor<T>& x);
    /// Backpropagates d(loss)/d(logits) of the last training forward, accumulating parameter gradients.
    void backward(const Tensor<T>& dlogits);

    std::vector<NamedParam<T>> parameters();
    void zero_grad();
    const MiniResNetConfig& config() const { return config_; }

    Conv2d<T> stem;
    BatchNorm2d<T> stem_bn;
    std::vector<ResidualBlock<T>> blocks;
    Tensor<T> fc_weight, fc_bias;

private:
    Tensor<T> trunk(const Tensor<T>& x, bool train);

    MiniResNetConfig config_;
    Tensor<T> stem_out_, gap_in_, gap_out_;
    std::size_t pooled_ = 0;
};

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 12;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

template <class T>
struct AdamState {
    std::vector<std::vector<T>> m, v;
};

/// One bias-corrected Adam update at step t >= 1 on every trainable parameter.
template <class T>
void adam_step(std::vector<NamedParam<T>>& params, AdamState<T>& state, std::size_t t, const TrainConfig& cfg);

/// In-memory samples, each H x W x C in [0, 1], with class labels.
struct Dataset {
    std::size_t height = 0, width = 0, channels = 3;
    std::vector<std::vector<float>> images;  // HWC
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
};

/// Copies the selected samples into an NCHW tensor.
template <class T>
Tensor<T> make_batch(const Dataset& data, std::span<const std::size_t> indices);

struct TrainResult {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;
};

using TrainProgress = std::function<void(std::size_t epoch, double loss, double accuracy)>;

/// Mini-batch Adam on the softmax cross-entropy loss; the sample order is
/// reshuffled each epoch from (cfg.seed, epoch).
TrainResult train(MiniResNet<float>& model, const Dataset& data, const TrainConfig& cfg,
                  const TrainProgress& progress = {});

/// GAP features for every sample, in order, batched for speed.
std::vector<std::vector<float>> extract_features(MiniResNet<float>& model, const Dataset& data,
                                                 std::size_t batch_size = 16);

/// Writes <dir>/params/<name>.cftr, <dir>/index.json and <dir>/config.json.
void save_checkpoint(MiniResNet<float>& model, const std::filesystem::path& dir);
MiniResNet<float> load_checkpoint(const std::filesystem::path& dir);

}  // namespace camfp::nn

#include "camfp/nn/model.hpp"

#include <cmath>

#include "camfp/common/rng.hpp"

namespace camfp::nn {

std::string to_string(ParamRole role) {
    switch (role) {
        case ParamRole::weight: return "weight";
        case ParamRole::bias: return "bias";
        case ParamRole::bn_scale: return "bn_scale";
        case ParamRole::bn_shift: return "bn_shift";
        case ParamRole::running_mean: return "running_mean";
        case ParamRole::running_var: return "running_var";
    }
    return "";
}

ParamRole param_role_from_string(const std::string& s) {
    for (auto r : {ParamRole::weight, ParamRole::bias, ParamRole::bn_scale, ParamRole::bn_shift,
                   ParamRole::running_mean, ParamRole::running_var})
        if (to_string(r) == s) return r;
    throw DataError("unknown parameter role '" + s + "'");
}

// ---- Conv2d

template <class T>
Conv2d<T>::Conv2d(std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t s, std::size_t p)
    : weight({out_c, in_c, k, k}), bias({out_c}), stride(s), pad(p) {}

template <class T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
    x_ = x;
    return conv2d(x, weight, bias, stride, pad);
}

template <class T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
    auto g = conv2d_backward(x_, weight, stride, pad, dy);
    weight.ensure_grad();
    bias.ensure_grad();
    for (std::size_t i = 0; i < weight.size(); ++i) weight.grad[i] += g.dw.data[i];
    for (std::size_t i = 0; i < bias.size(); ++i) bias.grad[i] += g.db.data[i];
    return std::move(g.dx);
}

template <class T>
void Conv2d<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".weight", &weight, ParamRole::weight});
    out.push_back({prefix + ".bias", &bias, ParamRole::bias});
}

// ---- BatchNorm2d

template <class T>
BatchNorm2d<T>::BatchNorm2d(std::size_t c)
    : gamma({c}, T(1)), beta({c}, T(0)), running_mean({c}, T(0)), running_var({c}, T(1)) {}

template <class T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, bool train) {
    if (!train) return batch_norm_infer(x, gamma, beta, running_mean, running_var, eps);
    std::vector<T> mean, var;
    Tensor<T> y = batch_norm_train(x, gamma, beta, eps, cache_, &mean, &var);
    const std::size_t m = x.dim(0) * x.dim(2) * x.dim(3);
    const T unbias = m > 1 ? static_cast<T>(m) / static_cast<T>(m - 1) : T(1);
    for (std::size_t c = 0; c < mean.size(); ++c) {
        running_mean.data[c] = momentum * running_mean.data[c] + (1 - momentum) * mean[c];
        running_var.data[c] = momentum * running_var.data[c] + (1 - momentum) * var[c] * unbias;
    }
    return y;
}

template <class T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy) {
    auto g = batch_norm_backward(gamma, cache_, dy);
    gamma.ensure_grad();
    beta.ensure_grad();
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        gamma.grad[i] += g.dgamma.data[i];
        beta.grad[i] += g.dbeta.data[i];
    }
    return std::move(g.dx);
}

template <class T>
void BatchNorm2d<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, ParamRole::bn_scale});
    out.push_back({prefix + ".beta", &beta, ParamRole::bn_shift});
    out.push_back({prefix + ".running_mean", &running_mean, ParamRole::running_mean});
    out.push_back({prefix + ".running_var", &running_var, ParamRole::running_var});
}

// ---- ResidualBlock

template <class T>
ResidualBlock<T>::ResidualBlock(std::size_t in_c, std::size_t out_c, std::size_t stride)
    : conv1(in_c, out_c, 3, stride, 1), conv2(out_c, out_c, 3, 1, 1), bn1(out_c), bn2(out_c) {
    if (stride != 1 || in_c != out_c) {
        projection_ = true;
        proj = Conv2d<T>(in_c, out_c, 1, stride, 0);
        proj_bn = BatchNorm2d<T>(out_c);
    }
}

template <class T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x, bool train) {
    r1_ = relu(bn1.forward(conv1.forward(x), train));
    Tensor<T> a2 = bn2.forward(conv2.forward(r1_), train);
    if (projection_) {
        const Tensor<T> sc = proj_bn.forward(proj.forward(x), train);
        if (sc.shape != a2.shape) throw ShapeError("residual block: shortcut shape mismatch");
        for (std::size_t i = 0; i < a2.size(); ++i) a2.data[i] += sc.data[i];
    } else {
        if (x.shape != a2.shape) throw ShapeError("residual block: identity shortcut needs matching shapes");
        for (std::size_t i = 0; i < a2.size(); ++i) a2.data[i] += x.data[i];
    }
    out_ = relu(a2);
    return out_;
}

template <class T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& dy) {
    const Tensor<T> d = relu_backward(out_, dy);
    Tensor<T> dx = conv1.backward(bn1.backward(relu_backward(r1_, conv2.backward(bn2.backward(d)))));
    const Tensor<T> dsc = projection_ ? proj.backward(proj_bn.backward(d)) : d;
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dsc.data[i];
    return dx;
}

template <class T>
void ResidualBlock<T>::collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    conv1.collect(prefix + ".conv1", out);
    bn1.collect(prefix + ".bn1", out);
    conv2.collect(prefix + ".conv2", out);
    bn2.collect(prefix + ".bn2", out);
    if (projection_) {
        proj.collect(prefix + ".proj", out);
        proj_bn.collect(prefix + ".proj_bn", out);
    }
}

// ---- MiniResNet

void MiniResNetConfig::validate() const {
    if (in_channels == 0 || stem_channels == 0 || blocks_per_stage == 0 || stem_stride == 0)
        throw ArgumentError("network counts must be >= 1");
    if (stage_channels.empty()) throw ArgumentError("network needs at least one stage");
    for (auto c : stage_channels)
        if (c == 0) throw ArgumentError("stage channels must be >= 1");
    if (num_classes < 2) throw ArgumentError("num_classes must be >= 2");
}

template <class T>
MiniResNet<T>::MiniResNet(const MiniResNetConfig& config, std::uint64_t seed) : config_(config) {
    config.validate();
    stem = Conv2d<T>(config.in_channels, config.stem_channels, 3, config.stem_stride, 1);
    stem_bn = BatchNorm2d<T>(config.stem_channels);
    std::size_t in_c = config.stem_channels;
    for (std::size_t s = 0; s < config.stage_channels.size(); ++s)
        for (std::size_t b = 0; b < config.blocks_per_stage; ++b) {
            const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
            blocks.emplace_back(in_c, config.stage_channels[s], stride);
            in_c = config.stage_channels[s];
        }
    fc_weight = Tensor<T>({config.num_classes, in_c});
    fc_bias = Tensor<T>({config.num_classes});

    for (auto& p : parameters()) {
        if (p.role != ParamRole::weight) continue;
        const auto& sh = p.tensor->shape;
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < sh.size(); ++i) fan_in *= sh[i];
        // He scaling before relu layers; the classifier head uses 1/fan_in.
        const double sd = p.tensor == &fc_weight ? std::sqrt(1.0 / fan_in) : std::sqrt(2.0 / fan_in);
        CounterRng rng(derive_seed(seed, fnv1a64(p.name)));
        for (auto& v : p.tensor->data) v = static_cast<T>(sd * rng.normal());
    }
}

template <class T>
Tensor<T> MiniResNet<T>::trunk(const Tensor<T>& x, bool train) {
    require_rank(x, 4, "MiniResNet input");
    if (x.dim(1) != config_.in_channels) throw ShapeError("MiniResNet: input channel count mismatch");
    stem_out_ = relu(stem_bn.forward(stem.forward(x), train));
    Tensor<T> h = config_.stem_pool ? avg_pool2(stem_out_) : stem_out_;
    for (auto& b : blocks) h = b.forward(h, train);
    gap_in_ = h;
    return global_avg_pool(h);
}

template <class T>
Tensor<T> MiniResNet<T>::forward(const Tensor<T>& x, bool train) {
    gap_out_ = trunk(x, train);
    return linear(gap_out_, fc_weight, fc_bias);
}

template <class T>
Tensor<T> MiniResNet<T>::features(const Tensor<T>& x) {
    return trunk(x, false);
}

template <class T>
void MiniResNet<T>::backward(const Tensor<T>& dlogits) {
    auto g = linear_backward(gap_out_, fc_weight, dlogits);
    fc_weight.ensure_grad();
    fc_bias.ensure_grad();
    for (std::size_t i = 0; i < fc_weight.size(); ++i) fc_weight.grad[i] += g.dw.data[i];
    for (std::size_t i = 0; i < fc_bias.size(); ++i) fc_bias.grad[i] += g.db.data[i];
    Tensor<T> d = global_avg_pool_backward(g.dx, gap_in_.dim(2), gap_in_.dim(3));
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) d = it->backward(d);
    if (config_.stem_pool) d = avg_pool2_backward(d);
    stem.backward(stem_bn.backward(relu_backward(stem_out_, d)));
}

template <class T>
std::vector<NamedParam<T>> MiniResNet<T>::parameters() {
    std::vector<NamedParam<T>> out;
    stem.collect("stem.conv", out);
    stem_bn.collect("stem.bn", out);
    std::size_t k = 0;
    for (std::size_t s = 0; s < config_.stage_channels.size(); ++s)
        for (std::size_t b = 0; b < config_.blocks_per_stage; ++b, ++k)
            blocks[k].collect("stage" + std::to_string(s) + ".block" + std::to_string(b), out);
    out.push_back({"fc.weight", &fc_weight, ParamRole::weight});
    out.push_back({"fc.bias", &fc_bias, ParamRole::bias});
    return out;
}

template <class T>
void MiniResNet<T>::zero_grad() {
    for (auto& p : parameters())
        if (p.trainable()) p.tensor->zero_grad();
}

// ---- Adam

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0) throw ArgumentError("epochs and batch_size must be >= 1");
    if (!(learning_rate > 0)) throw ArgumentError("learning_rate must be > 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ArgumentError("adam betas must be in [0,1)");
    if (!(epsilon > 0)) throw ArgumentError("adam epsilon must be > 0");
}

template <class T>
void adam_step(std::vector<NamedParam<T>>& params, AdamState<T>& state, std::size_t t, const TrainConfig& cfg) {
    if (t == 0) throw ArgumentError("adam_step: t must be >= 1");
    if (state.m.empty()) {
        for (auto& p : params) {
            state.m.emplace_back(p.trainable() ? p.tensor->size() : 0, T(0));
            state.v.emplace_back(p.trainable() ? p.tensor->size() : 0, T(0));
        }
    }
    if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
    const double c1 = 1 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1 - std::pow(cfg.beta2, static_cast<double>(t));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T step = static_cast<T>(cfg.learning_rate / c1);
    const T inv_c2 = static_cast<T>(1.0 / std::sqrt(c2));
    const T eps = static_cast<T>(cfg.epsilon);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (!p.trainable()) continue;
        auto& data = p.tensor->data;
        const auto& grad = p.tensor->grad;
        if (grad.empty()) continue;
        if (grad.size() != data.size() || state.m[k].size() != data.size())
            throw ShapeError("adam_step: gradient shape mismatch for " + p.name);
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < data.size(); ++i) {
            const T g = grad[i];
            m[i] = b1 * m[i] + (1 - b1) * g;
            v[i] = b2 * v[i] + (1 - b2) * g * g;
            data[i] -= step * m[i] / (std::sqrt(v[i]) * inv_c2 + eps);
        }
    }
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;
template class MiniResNet<float>;
template class MiniResNet<double>;
template void adam_step(std::vector<NamedParam<float>>&, AdamState<float>&, std::size_t, const TrainConfig&);
template void adam_step(std::vector<NamedParam<double>>&, AdamState<double>&, std::size_t, const TrainConfig&);

}  // namespace camfp::nn

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "camfp/nn/tensor.hpp"

namespace camfp::nn {

// Stateless forward/backward kernels. Activations are NCHW, conv weights
// O x C x K x K, linear weights O x F.

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride, std::size_t pad);

template <class T>
struct ConvGrads {
    Tensor<T> dx, dw, db;
};

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride, std::size_t pad,
                             const Tensor<T>& dy);

template <class T>
Tensor<T> relu(const Tensor<T>& x);

/// Gradient through relu given its output.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy);

/// Non-overlapping 2x2 average pooling; H and W must be even.
template <class T>
Tensor<T> avg_pool2(const Tensor<T>& x);
template <class T>
Tensor<T> avg_pool2_backward(const Tensor<T>& dy);

/// N x C x H x W -> N x C spatial mean.
template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <class T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, std::size_t h, std::size_t w);

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <class T>
struct LinearGrads {
    Tensor<T> dx, dw, db;
};

template <class T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

template <class T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<T> inv_std;
};

/// Training-mode batch normalization over N, H, W per channel.
template <class T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps,
                           BatchNormCache<T>& cache, std::vector<T>* batch_mean = nullptr,
                           std::vector<T>* batch_var = nullptr);

/// Inference-mode normalization with fixed statistics.
template <class T>
Tensor<T> batch_norm_infer(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, const Tensor<T>& mean,
                           const Tensor<T>& var, T eps);

template <class T>
struct BatchNormGrads {
    Tensor<T> dx, dgamma, dbeta;
};

template <class T>
BatchNormGrads<T> batch_norm_backward(const Tensor<T>& gamma, const BatchNormCache<T>& cache, const Tensor<T>& dy);

/// Row-wise softmax with max subtraction. Input N x D or a length-D vector.
template <class T>
Tensor<T> softmax(const Tensor<T>& z);

/// Mean categorical cross-entropy of probabilities `p` (N x D) against one-hot
/// rows `y`; log is clamped at 1e-12.
template <class T>
T cross_entropy(const Tensor<T>& p, const Tensor<T>& y);

/// One-hot N x D matrix from labels.
template <class T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t classes);

/// Gradient of mean(cross_entropy(softmax(z), y)) with respect to z: (p - y) / N.
template <class T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& p, const Tensor<T>& y);

}  // namespace camfp::nn

#include "camfp/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace camfp::nn {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using CMapMat = Eigen::Map<const RowMat<T>>;

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    if (in + 2 * pad < k) throw ShapeError("conv2d: kernel larger than padded input");
    return (in + 2 * pad - k) / stride + 1;
}

// col is (C*K*K) x (Ho*Wo) for one sample.
template <class T>
void im2col(const T* x, std::size_t C, std::size_t H, std::size_t W, std::size_t K, std::size_t stride,
            std::size_t pad, std::size_t Ho, std::size_t Wo, T* col) {
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ki = 0; ki < K; ++ki)
            for (std::size_t kj = 0; kj < K; ++kj) {
                T* row = col + ((c * K + ki) * K + kj) * Ho * Wo;
                for (std::size_t oh = 0; oh < Ho; ++oh) {
                    const long ih = static_cast<long>(oh * stride + ki) - static_cast<long>(pad);
                    T* dst = row + oh * Wo;
                    if (ih < 0 || ih >= static_cast<long>(H)) {
                        std::fill(dst, dst + Wo, T(0));
                        continue;
                    }
                    const T* src = x + (c * H + static_cast<std::size_t>(ih)) * W;
                    for (std::size_t ow = 0; ow < Wo; ++ow) {
                        const long iw = static_cast<long>(ow * stride + kj) - static_cast<long>(pad);
                        dst[ow] = (iw < 0 || iw >= static_cast<long>(W)) ? T(0) : src[iw];
                    }
                }
            }
}

template <class T>
void col2im(const T* col, std::size_t C, std::size_t H, std::size_t W, std::size_t K, std::size_t stride,
            std::size_t pad, std::size_t Ho, std::size_t Wo, T* dx) {
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ki = 0; ki < K; ++ki)
            for (std::size_t kj = 0; kj < K; ++kj) {
                const T* row = col + ((c * K + ki) * K + kj) * Ho * Wo;
                for (std::size_t oh = 0; oh < Ho; ++oh) {
                    const long ih = static_cast<long>(oh * stride + ki) - static_cast<long>(pad);
                    if (ih < 0 || ih >= static_cast<long>(H)) continue;
                    T* dst = dx + (c * H + static_cast<std::size_t>(ih)) * W;
                    const T* src = row + oh * Wo;
                    for (std::size_t ow = 0; ow < Wo; ++ow) {
                        const long iw = static_cast<long>(ow * stride + kj) - static_cast<long>(pad);
                        if (iw >= 0 && iw < static_cast<long>(W)) dst[iw] += src[ow];
                    }
                }
            }
}

template <class T>
void check_conv(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride) {
    require_rank(x, 4, "conv2d input");
    require_rank(w, 4, "conv2d weight");
    if (w.dim(1) != x.dim(1)) {
        throw ShapeError("conv2d: weight expects " + std::to_string(w.dim(1)) + " input channels, got " +
                         std::to_string(x.dim(1)));
    }
    if (w.dim(2) != w.dim(3)) throw ShapeError("conv2d: kernel must be square");
    if (stride == 0) throw ArgumentError("conv2d: stride must be >= 1");
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride, std::size_t pad) {
    check_conv(x, w, stride);
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = w.dim(0), K = w.dim(2);
    if (b.size() != O) throw ShapeError("conv2d: bias length must equal output channels");
    const std::size_t Ho = out_extent(H, K, stride, pad), Wo = out_extent(W, K, stride, pad);
    Tensor<T> y({N, O, Ho, Wo});
    std::vector<T> col(C * K * K * Ho * Wo);
    CMapMat<T> wm(w.data.data(), O, C * K * K);
    for (std::size_t n = 0; n < N; ++n) {
        im2col(x.data.data() + n * C * H * W, C, H, W, K, stride, pad, Ho, Wo, col.data());
        MapMat<T> ym(y.data.data() + n * O * Ho * Wo, O, Ho * Wo);
        ym.noalias() = wm * CMapMat<T>(col.data(), C * K * K, Ho * Wo);
        for (std::size_t o = 0; o < O; ++o) ym.row(o).array() += b.data[o];
    }
    return y;
}

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride, std::size_t pad,
                             const Tensor<T>& dy) {
    check_conv(x, w, stride);
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = w.dim(0), K = w.dim(2);
    const std::size_t Ho = out_extent(H, K, stride, pad), Wo = out_extent(W, K, stride, pad);
    if (dy.shape != std::vector<std::size_t>{N, O, Ho, Wo}) throw ShapeError("conv2d_backward: dy shape mismatch");
    ConvGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape), Tensor<T>({O})};
    std::vector<T> col(C * K * K * Ho * Wo), dcol(col.size());
    CMapMat<T> wm(w.data.data(), O, C * K * K);
    MapMat<T> dwm(g.dw.data.data(), O, C * K * K);
    for (std::size_t n = 0; n < N; ++n) {
        CMapMat<T> dym(dy.data.data() + n * O * Ho * Wo, O, Ho * Wo);
        im2col(x.data.data() + n * C * H * W, C, H, W, K, stride, pad, Ho, Wo, col.data());
        dwm.noalias() += dym * CMapMat<T>(col.data(), C * K * K, Ho * Wo).transpose();
        for (std::size_t o = 0; o < O; ++o) {
            const T* row = dy.data.data() + (n * O + o) * Ho * Wo;
            g.db.data[o] += std::accumulate(row, row + Ho * Wo, T(0));
        }
        MapMat<T>(dcol.data(), C * K * K, Ho * Wo).noalias() = wm.transpose() * dym;
        col2im(dcol.data(), C, H, W, K, stride, pad, Ho, Wo, g.dx.data.data() + n * C * H * W);
    }
    return g;
}

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return y;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy) {
    if (y.shape != dy.shape) throw ShapeError("relu_backward: shape mismatch");
    Tensor<T> dx(y.shape);
    for (std::size_t i = 0; i < y.size(); ++i) dx.data[i] = y.data[i] > T(0) ? dy.data[i] : T(0);
    return dx;
}

template <class T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
    require_rank(x, 4, "avg_pool2");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 || W % 2) throw ShapeError("avg_pool2: spatial size must be even, got " + shape_string(x.shape));
    Tensor<T> y({N, C, H / 2, W / 2});
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const T* src = x.data.data() + nc * H * W;
        T* dst = y.data.data() + nc * (H / 2) * (W / 2);
        for (std::size_t i = 0; i < H / 2; ++i)
            for (std::size_t j = 0; j < W / 2; ++j) {
                const T* p = src + 2 * i * W + 2 * j;
                dst[i * (W / 2) + j] = T(0.25) * (p[0] + p[1] + p[W] + p[W + 1]);
            }
    }
    return y;
}

template <class T>
Tensor<T> avg_pool2_backward(const Tensor<T>& dy) {
    require_rank(dy, 4, "avg_pool2_backward");
    const std::size_t N = dy.dim(0), C = dy.dim(1), h = dy.dim(2), w = dy.dim(3);
    Tensor<T> dx({N, C, 2 * h, 2 * w});
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const T* src = dy.data.data() + nc * h * w;
        T* dst = dx.data.data() + nc * 4 * h * w;
        for (std::size_t i = 0; i < 2 * h; ++i)
            for (std::size_t j = 0; j < 2 * w; ++j) dst[i * 2 * w + j] = T(0.25) * src[(i / 2) * w + j / 2];
    }
    return dx;
}

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    require_rank(x, 4, "global_avg_pool");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Tensor<T> y({N, C});
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        const T* p = x.data.data() + nc * HW;
        T s = 0;
        for (std::size_t i = 0; i < HW; ++i) s += p[i];
        y.data[nc] = s / static_cast<T>(HW);
    }
    return y;
}

template <class T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, std::size_t h, std::size_t w) {
    require_rank(dy, 2, "global_avg_pool_backward");
    const std::size_t N = dy.dim(0), C = dy.dim(1), HW = h * w;
    Tensor<T> dx({N, C, h, w});
    for (std::size_t nc = 0; nc < N * C; ++nc)
        std::fill_n(dx.data.data() + nc * HW, HW, dy.data[nc] / static_cast<T>(HW));
    return dx;
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    require_rank(x, 2, "linear input");
    require_rank(w, 2, "linear weight");
    const std::size_t N = x.dim(0), F = x.dim(1), O = w.dim(0);
    if (w.dim(1) != F) throw ShapeError("linear: weight expects " + std::to_string(w.dim(1)) + " features, got " +
                                         std::to_string(F));
    if (b.size() != O) throw ShapeError("linear: bias length must equal outputs");
    Tensor<T> y({N, O});
    MapMat<T> ym(y.data.data(), N, O);
    ym.noalias() = CMapMat<T>(x.data.data(), N, F) * CMapMat<T>(w.data.data(), O, F).transpose();
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) ym(n, o) += b.data[o];
    return y;
}

template <class T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
    const std::size_t N = x.dim(0), F = x.dim(1), O = w.dim(0);
    if (dy.shape != std::vector<std::size_t>{N, O}) throw ShapeError("linear_backward: dy shape mismatch");
    LinearGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape), Tensor<T>({O})};
    CMapMat<T> dym(dy.data.data(), N, O);
    MapMat<T>(g.dx.data.data(), N, F).noalias() = dym * CMapMat<T>(w.data.data(), O, F);
    MapMat<T>(g.dw.data.data(), O, F).noalias() = dym.transpose() * CMapMat<T>(x.data.data(), N, F);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t o = 0; o < O; ++o) g.db.data[o] += dy.data[r * O + o];
    return g;
}

template <class T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps,
                           BatchNormCache<T>& cache, std::vector<T>* batch_mean, std::vector<T>* batch_var) {
    require_rank(x, 4, "batch_norm");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (gamma.size() != C || beta.size() != C) throw ShapeError("batch_norm: parameter length must equal channels");
    const double M = static_cast<double>(N * HW);
    Tensor<T> y(x.shape);
    cache.xhat = Tensor<T>(x.shape);
    cache.inv_std.assign(C, T(0));
    if (batch_mean) batch_mean->assign(C, T(0));
    if (batch_var) batch_var->assign(C, T(0));
    for (std::size_t c = 0; c < C; ++c) {
        double s = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const T* p = x.data.data() + (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) s += p[i];
        }
        const double mean = s / M;
        double v = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const T* p = x.data.data() + (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) v += (p[i] - mean) * (p[i] - mean);
        }
        const double var = v / M;
        const T inv = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
        cache.inv_std[c] = inv;
        if (batch_mean) (*batch_mean)[c] = static_cast<T>(mean);
        if (batch_var) (*batch_var)[c] = static_cast<T>(var);
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                const T xh = static_cast<T>(x.data[off + i] - mean) * inv;
                cache.xhat.data[off + i] = xh;
                y.data[off + i] = gamma.data[c] * xh + beta.data[c];
            }
        }
    }
    return y;
}

template <class T>
Tensor<T> batch_norm_infer(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, const Tensor<T>& mean,
                           const Tensor<T>& var, T eps) {
    require_rank(x, 4, "batch_norm");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (gamma.size() != C || beta.size() != C || mean.size() != C || var.size() != C)
        throw ShapeError("batch_norm: parameter length must equal channels");
    Tensor<T> y(x.shape);
    for (std::size_t c = 0; c < C; ++c) {
        const T scale = gamma.data[c] / std::sqrt(var.data[c] + eps);
        const T shift = beta.data[c] - mean.data[c] * scale;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) y.data[off + i] = x.data[off + i] * scale + shift;
        }
    }
    return y;
}

template <class T>
BatchNormGrads<T> batch_norm_backward(const Tensor<T>& gamma, const BatchNormCache<T>& cache, const Tensor<T>& dy) {
    const auto& xh = cache.xhat;
    if (dy.shape != xh.shape) throw ShapeError("batch_norm_backward: dy shape mismatch");
    const std::size_t N = xh.dim(0), C = xh.dim(1), HW = xh.dim(2) * xh.dim(3);
    const T M = static_cast<T>(N * HW);
    BatchNormGrads<T> g{Tensor<T>(xh.shape), Tensor<T>({C}), Tensor<T>({C})};
    for (std::size_t c = 0; c < C; ++c) {
        T sdy = 0, sdyx = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                sdy += dy.data[off + i];
                sdyx += dy.data[off + i] * xh.data[off + i];
            }
        }
        g.dbeta.data[c] = sdy;
        g.dgamma.data[c] = sdyx;
        const T k = gamma.data[c] * cache.inv_std[c] / M;
        for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i)
                g.dx.data[off + i] = k * (M * dy.data[off + i] - sdy - xh.data[off + i] * sdyx);
        }
    }
    return g;
}

template <class T>
Tensor<T> softmax(const Tensor<T>& z) {
    if (z.ndim() != 1 && z.ndim() != 2) throw ShapeError("softmax: expected a vector or N x D matrix");
    const std::size_t D = z.shape.back(), N = z.size() / std::max<std::size_t>(D, 1);
    Tensor<T> p(z.shape);
    for (std::size_t n = 0; n < N; ++n) {
        const T* zi = z.data.data() + n * D;
        T* pi = p.data.data() + n * D;
        const T m = *std::max_element(zi, zi + D);
        T s = 0;
        for (std::size_t d = 0; d < D; ++d) s += (pi[d] = std::exp(zi[d] - m));
        for (std::size_t d = 0; d < D; ++d) pi[d] /= s;
    }
    return p;
}

template <class T>
T cross_entropy(const Tensor<T>& p, const Tensor<T>& y) {
    if (p.shape != y.shape) throw ShapeError("cross_entropy: prediction and target shapes differ");
    const std::size_t D = p.shape.back(), N = p.size() / D;
    if (N == 0) throw ArgumentError("cross_entropy: empty batch");
    T total = 0;
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t ones = 0;
        for (std::size_t d = 0; d < D; ++d) {
            const T v = y.data[n * D + d];
            if (v == T(1)) {
                ++ones;
                total -= std::log(std::max(p.data[n * D + d], static_cast<T>(1e-12)));
            } else if (v != T(0)) {
                throw ArgumentError("cross_entropy: target row " + std::to_string(n) + " is not one-hot");
            }
        }
        if (ones != 1) throw ArgumentError("cross_entropy: target row " + std::to_string(n) + " is not one-hot");
    }
    return total / static_cast<T>(N);
}

template <class T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t classes) {
    Tensor<T> y({labels.size(), classes});
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= classes) {
            throw DataError("label " + std::to_string(labels[n]) + " at row " + std::to_string(n) +
                            " outside [0, " + std::to_string(classes) + ")");
        }
        y.data[n * classes + static_cast<std::size_t>(labels[n])] = T(1);
    }
    return y;
}

template <class T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& p, const Tensor<T>& y) {
    if (p.shape != y.shape) throw ShapeError("softmax_cross_entropy_grad: shape mismatch");
    const std::size_t N = p.size() / p.shape.back();
    Tensor<T> g(p.shape);
    for (std::size_t i = 0; i < p.size(); ++i) g.data[i] = (p.data[i] - y.data[i]) / static_cast<T>(N);
    return g;
}

#define CAMFP_NN_OPS(T)                                                                                           \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);    \
    template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t,           \
                                          const Tensor<T>&);                                                      \
    template Tensor<T> relu(const Tensor<T>&);                                                                    \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> avg_pool2(const Tensor<T>&);                                                               \
    template Tensor<T> avg_pool2_backward(const Tensor<T>&);                                                      \
    template Tensor<T> global_avg_pool(const Tensor<T>&);                                                         \
    template Tensor<T> global_avg_pool_backward(const Tensor<T>&, std::size_t, std::size_t);                      \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                              \
    template LinearGrads<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> batch_norm_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T,                  \
                                        BatchNormCache<T>&, std::vector<T>*, std::vector<T>*);                    \
    template Tensor<T> batch_norm_infer(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                        const Tensor<T>&, T);                                                     \
    template BatchNormGrads<T> batch_norm_backward(const Tensor<T>&, const BatchNormCache<T>&, const Tensor<T>&); \
    template Tensor<T> softmax(const Tensor<T>&);                                                                 \
    template T cross_entropy(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> one_hot(std::span<const int>, std::size_t);                                                \
    template Tensor<T> softmax_cross_entropy_grad(const Tensor<T>&, const Tensor<T>&);

CAMFP_NN_OPS(float)
CAMFP_NN_OPS(double)

}  // namespace camfp::nn

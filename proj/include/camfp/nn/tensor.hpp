#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "camfp/common/error.hpp"

namespace camfp::nn {

/// Dense row-major array with an optional gradient buffer of the same length.
template <class T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;
    std::vector<T> grad;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, T fill = T(0)) : shape(std::move(s)), data(count(shape), fill) {}

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t ndim() const { return shape.size(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
    void zero_grad() { grad.assign(data.size(), T(0)); }

    T& operator[](std::size_t i) { return data[i]; }
    T operator[](std::size_t i) const { return data[i]; }

    /// NCHW element access.
    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((n * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

template <class T>
void require_rank(const Tensor<T>& t, std::size_t rank, const char* what) {
    if (t.ndim() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape));
    }
}

}  // namespace camfp::nn

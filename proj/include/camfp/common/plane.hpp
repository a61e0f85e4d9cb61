#pragma once

#include <cstddef>
#include <vector>

#include "camfp/common/error.hpp"

namespace camfp {

/// Row-major 2-D array of doubles; the working type for transforms and
/// noise residuals.
struct Plane {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Plane& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_same_shape(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols));
    }
}

}  // namespace camfp

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace camfp::svm {

using Vector = std::vector<double>;

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

struct SvmParams {
    double C = 10.0;
    std::optional<double> gamma;  // empty = auto
    double tol = 1e-3;
    std::size_t max_iter = 10'000'000;

    void validate() const;
};

/// Dual problem of one binary soft-margin SVM with labels +1 / -1.
struct BinaryProblem {
    std::vector<Vector> x;
    std::vector<int> y;  // +1 or -1
    double C = 10.0;
    double gamma = 1.0;
};

struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;  // decision(x) = sum alpha_i y_i k(x_i, x) + bias
    std::size_t iterations = 0;
    bool converged = false;
};

/// SMO with second-order working-set selection; deterministic.
BinarySolution smo_solve(const BinaryProblem& problem, double tol, std::size_t max_iter);

struct BinaryModel {
    int positive = 0;  // class label voted for when the decision is > 0
    int negative = 0;
    std::vector<Vector> support;  // standardized support vectors
    std::vector<double> coef;     // alpha_i * y_i
    double bias = 0.0;

    double decision(std::span<const double> z, double gamma) const;
    double alpha_sum_y() const;
};

struct SvmModel {
    std::vector<int> classes;  // sorted
    double C = 10.0;
    double gamma = 1.0;
    std::size_t dim = 0;
    Vector mean, stddev;
    std::vector<BinaryModel> pairs;  // one per class pair, (i < j) order

    Vector standardize(std::span<const double> x) const;
};

/// One-vs-one RBF SVM on z-scored features.
SvmModel svm_train(const std::vector<Vector>& features, const std::vector<int>& labels, const SvmParams& params = {});

struct Prediction {
    int label = 0;
    std::vector<std::size_t> votes;   // per entry of model.classes
    std::vector<double> margins;      // summed |decision| of the votes each class received
};

/// Majority vote; ties go to the larger summed margin, then to the smaller label.
Prediction svm_predict(const SvmModel& model, std::span<const double> x);

/// Text header (JSON) followed by tensor blocks for each pair's support vectors and coefficients.
void save_svm(const SvmModel& model, const std::filesystem::path& file);
SvmModel load_svm(const std::filesystem::path& file);

}  // namespace camfp::svm

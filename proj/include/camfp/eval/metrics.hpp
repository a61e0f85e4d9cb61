#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace camfp::eval {

struct EvalReport {
    std::size_t num_classes = 0;
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;                       // percent
    std::vector<std::vector<double>> confusion;  // row-normalized, rows = true class
    std::vector<std::vector<std::size_t>> counts;
    std::vector<double> per_class_accuracy;      // percent; 0 for classes without samples
    std::vector<std::size_t> support;
};

/// Predictions as (true, predicted) label pairs with labels in [0, num_classes).
EvalReport evaluate(const std::vector<std::pair<int, int>>& predictions, std::size_t num_classes);

struct VoteInput {
    std::string group;  // e.g. source image id
    int truth = 0;
    int predicted = 0;
};

/// One (true, predicted) pair per group by majority vote; ties go to the smallest label.
std::vector<std::pair<int, int>> majority_vote(const std::vector<VoteInput>& rows);

struct Embedding {
    std::vector<std::vector<double>> points;  // n x dims
    std::vector<double> eigenvalues;          // all covariance eigenvalues, descending
    std::vector<std::vector<double>> components;  // dims x feature_dim
    bool degenerate = false;
};

/// PCA projection onto the top `dims` principal directions. Each component
/// is signed so its largest-magnitude loading is positive.
Embedding pca_embed(const std::vector<std::vector<double>>& features, std::size_t dims = 2);

}  // namespace camfp::eval

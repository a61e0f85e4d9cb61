#include "camfp/eval/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "camfp/common/error.hpp"

namespace camfp::eval {

EvalReport evaluate(const std::vector<std::pair<int, int>>& predictions, std::size_t num_classes) {
    if (predictions.empty()) throw ArgumentError("evaluate: no predictions");
    if (num_classes == 0) throw ArgumentError("evaluate: num_classes must be >= 1");
    EvalReport r;
    r.num_classes = num_classes;
    r.counts.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (const auto& [t, p] : predictions) {
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
            throw ArgumentError("evaluate: label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                ") outside [0, " + std::to_string(num_classes) + ")");
        }
        ++r.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        if (t == p) ++r.correct;
    }
    r.total = predictions.size();
    r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
    r.confusion.assign(num_classes, std::vector<double>(num_classes, 0.0));
    r.per_class_accuracy.assign(num_classes, 0.0);
    r.support.assign(num_classes, 0);
    for (std::size_t t = 0; t < num_classes; ++t) {
        std::size_t row = 0;
        for (auto c : r.counts[t]) row += c;
        r.support[t] = row;
        if (row == 0) continue;
        for (std::size_t p = 0; p < num_classes; ++p)
            r.confusion[t][p] = static_cast<double>(r.counts[t][p]) / static_cast<double>(row);
        r.per_class_accuracy[t] = 100.0 * r.confusion[t][t];
    }
    return r;
}

std::vector<std::pair<int, int>> majority_vote(const std::vector<VoteInput>& rows) {
    std::map<std::string, std::pair<int, std::map<int, std::size_t>>> groups;
    for (const auto& r : rows) {
        auto& g = groups[r.group];
        if (g.second.empty()) g.first = r.truth;
        else if (g.first != r.truth) throw DataError("majority_vote: group " + r.group + " has mixed true labels");
        ++g.second[r.predicted];
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [name, g] : groups) {
        int best = g.second.begin()->first;
        std::size_t best_n = 0;
        for (const auto& [label, n] : g.second)
            if (n > best_n) {
                best = label;
                best_n = n;
            }
        out.emplace_back(g.first, best);
    }
    return out;
}

Embedding pca_embed(const std::vector<std::vector<double>>& features, std::size_t dims) {
    if (dims == 0) throw ArgumentError("pca_embed: dims must be >= 1");
    if (features.size() < dims + 1) {
        throw ArgumentError("pca_embed: need at least " + std::to_string(dims + 1) + " samples, got " +
                            std::to_string(features.size()));
    }
    const std::size_t n = features.size(), d = features[0].size();
    if (d < dims) throw ArgumentError("pca_embed: feature dimension smaller than dims");
    Eigen::MatrixXd X(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (features[i].size() != d) throw ShapeError("pca_embed: inconsistent feature dimension");
        for (std::size_t j = 0; j < d; ++j) X(i, j) = features[i][j];
    }
    X.rowwise() -= X.colwise().mean();
    const Eigen::MatrixXd cov = X.transpose() * X / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Embedding e;
    for (std::size_t k = 0; k < d; ++k) e.eigenvalues.push_back(std::max(0.0, es.eigenvalues()(static_cast<long>(d - 1 - k))));
    e.points.assign(n, std::vector<double>(dims, 0.0));
    e.components.assign(dims, std::vector<double>(d, 0.0));
    if (e.eigenvalues[0] <= 1e-300 || !std::isfinite(e.eigenvalues[0])) {
        e.degenerate = true;
        return e;
    }
    for (std::size_t k = 0; k < dims; ++k) {
        Eigen::VectorXd v = es.eigenvectors().col(static_cast<long>(d - 1 - k));
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        for (std::size_t j = 0; j < d; ++j) e.components[k][j] = v(static_cast<long>(j));
        const Eigen::VectorXd proj = X * v;
        for (std::size_t i = 0; i < n; ++i) e.points[i][k] = proj(static_cast<long>(i));
    }
    return e;
}

}  // namespace camfp::eval

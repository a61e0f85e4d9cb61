#include "camfp/svm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "camfp/common/error.hpp"
#include "camfp/common/tensor_file.hpp"
#include "json.hpp"

namespace camfp::svm {

namespace {

constexpr double kTau = 1e-12;
constexpr double kStdFloor = 1e-8;

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    if (a.size() != b.size()) {
        throw ShapeError("rbf_kernel: dimension mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    if (!(gamma > 0)) throw ArgumentError("rbf_kernel: gamma must be > 0");
    return std::exp(-gamma * sq_dist(a, b));
}

void SvmParams::validate() const {
    if (!(C > 0)) throw ArgumentError("svm: C must be > 0");
    if (gamma && !(*gamma > 0)) throw ArgumentError("svm: gamma must be > 0");
    if (!(tol > 0)) throw ArgumentError("svm: tol must be > 0");
    if (max_iter == 0) throw ArgumentError("svm: max_iter must be >= 1");
}

BinarySolution smo_solve(const BinaryProblem& pb, double tol, std::size_t max_iter) {
    const std::size_t n = pb.x.size();
    if (n == 0 || pb.y.size() != n) throw ArgumentError("smo_solve: empty or inconsistent problem");
    const double C = pb.C;
    // Q_ij = y_i y_j K_ij, kept dense.
    std::vector<double> Q(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double q = pb.y[i] * pb.y[j] * rbf_kernel(pb.x[i], pb.x[j], pb.gamma);
            Q[i * n + j] = Q[j * n + i] = q;
        }
    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    auto& a = sol.alpha;
    std::vector<double> G(n, -1.0);
    auto upper = [&](std::size_t t) { return a[t] >= C; };
    auto lower = [&](std::size_t t) { return a[t] <= 0; };

    for (; sol.iterations < max_iter; ++sol.iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (pb.y[t] == 1 ? !upper(t) : !lower(t)) {
                const double v = -pb.y[t] * G[t];
                if (v > gmax) {
                    gmax = v;
                    i = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        if (i >= 0) {
            const double* Qi = &Q[static_cast<std::size_t>(i) * n];
            const double Qii = Qi[i];
            const int yi = pb.y[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < n; ++t) {
                double grad_diff, quad;
                if (pb.y[t] == 1) {
                    if (lower(t)) continue;
                    gmax2 = std::max(gmax2, G[t]);
                    grad_diff = gmax + G[t];
                    quad = Qii + Q[t * n + t] - 2.0 * yi * Qi[t];
                } else {
                    if (upper(t)) continue;
                    gmax2 = std::max(gmax2, -G[t]);
                    grad_diff = gmax - G[t];
                    quad = Qii + Q[t * n + t] + 2.0 * yi * Qi[t];
                }
                if (grad_diff > 0) {
                    const double obj = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
                    if (obj < best) {
                        best = obj;
                        j = static_cast<std::ptrdiff_t>(t);
                    }
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < tol) {
            sol.converged = true;
            break;
        }
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const double old_ai = a[ui], old_aj = a[uj];
        const double Qij = Q[ui * n + uj];
        if (pb.y[ui] != pb.y[uj]) {
            double quad = Q[ui * n + ui] + Q[uj * n + uj] + 2 * Qij;
            if (quad <= 0) quad = kTau;
            const double delta = (-G[ui] - G[uj]) / quad;
            const double diff = a[ui] - a[uj];
            a[ui] += delta;
            a[uj] += delta;
            if (diff > 0) {
                if (a[uj] < 0) {
                    a[uj] = 0;
                    a[ui] = diff;
                }
            } else if (a[ui] < 0) {
                a[ui] = 0;
                a[uj] = -diff;
            }
            if (diff > 0) {
                if (a[ui] > C) {
                    a[ui] = C;
                    a[uj] = C - diff;
                }
            } else if (a[uj] > C) {
                a[uj] = C;
                a[ui] = C + diff;
            }
        } else {
            double quad = Q[ui * n + ui] + Q[uj * n + uj] - 2 * Qij;
            if (quad <= 0) quad = kTau;
            const double delta = (G[ui] - G[uj]) / quad;
            const double sum = a[ui] + a[uj];
            a[ui] -= delta;
            a[uj] += delta;
            if (sum > C) {
                if (a[ui] > C) {
                    a[ui] = C;
                    a[uj] = sum - C;
                }
            } else if (a[uj] < 0) {
                a[uj] = 0;
                a[ui] = sum;
            }
            if (sum > C) {
                if (a[uj] > C) {
                    a[uj] = C;
                    a[ui] = sum - C;
                }
            } else if (a[ui] < 0) {
                a[ui] = 0;
                a[uj] = sum;
            }
        }
        const double dai = a[ui] - old_ai, daj = a[uj] - old_aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q[t * n + ui] * dai + Q[t * n + uj] * daj;
    }

    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = pb.y[t] * G[t];
        if (upper(t)) {
            if (pb.y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (pb.y[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2;
    sol.bias = -rho;
    return sol;
}

double BinaryModel::decision(std::span<const double> z, double gamma) const {
    double s = bias;
    for (std::size_t k = 0; k < support.size(); ++k) s += coef[k] * rbf_kernel(support[k], z, gamma);
    return s;
}

double BinaryModel::alpha_sum_y() const { return std::accumulate(coef.begin(), coef.end(), 0.0); }

Vector SvmModel::standardize(std::span<const double> x) const {
    if (x.size() != dim) {
        throw ShapeError("svm: feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                         std::to_string(dim));
    }
    Vector z(dim);
    for (std::size_t d = 0; d < dim; ++d) z[d] = (x[d] - mean[d]) / stddev[d];
    return z;
}

SvmModel svm_train(const std::vector<Vector>& features, const std::vector<int>& labels, const SvmParams& params) {
    params.validate();
    if (features.size() != labels.size()) throw ArgumentError("svm_train: feature/label count mismatch");
    if (features.empty()) throw ArgumentError("svm_train: no training samples");
    SvmModel m;
    m.C = params.C;
    m.dim = features[0].size();
    if (m.dim == 0) throw ArgumentError("svm_train: zero-dimensional features");
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != m.dim) throw ShapeError("svm_train: inconsistent feature dimension at row " + std::to_string(i));
        for (double v : features[i])
            if (!std::isfinite(v)) throw DataError("svm_train: non-finite feature at row " + std::to_string(i));
    }
    m.classes = labels;
    std::sort(m.classes.begin(), m.classes.end());
    m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
    if (m.classes.size() < 2) throw ArgumentError("svm_train: need at least 2 classes");

    const double n = static_cast<double>(features.size());
    m.mean.assign(m.dim, 0.0);
    m.stddev.assign(m.dim, 0.0);
    for (const auto& f : features)
        for (std::size_t d = 0; d < m.dim; ++d) m.mean[d] += f[d];
    for (auto& v : m.mean) v /= n;
    for (const auto& f : features)
        for (std::size_t d = 0; d < m.dim; ++d) m.stddev[d] += (f[d] - m.mean[d]) * (f[d] - m.mean[d]);
    for (auto& v : m.stddev) v = std::max(std::sqrt(v / n), kStdFloor);

    std::vector<Vector> z;
    z.reserve(features.size());
    for (const auto& f : features) z.push_back(m.standardize(f));
    if (params.gamma) {
        m.gamma = *params.gamma;
    } else {
        double s = 0, s2 = 0;
        for (const auto& v : z)
            for (double e : v) {
                s += e;
                s2 += e * e;
            }
        const double cnt = n * static_cast<double>(m.dim);
        const double var = s2 / cnt - (s / cnt) * (s / cnt);
        m.gamma = var > 0 ? 1.0 / (static_cast<double>(m.dim) * var) : 1.0 / static_cast<double>(m.dim);
    }

    for (std::size_t ci = 0; ci < m.classes.size(); ++ci)
        for (std::size_t cj = ci + 1; cj < m.classes.size(); ++cj) {
            std::vector<std::size_t> idx;
            for (std::size_t k = 0; k < labels.size(); ++k)
                if (labels[k] == m.classes[ci] || labels[k] == m.classes[cj]) idx.push_back(k);
            // Canonical order makes the solution independent of input order.
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (labels[a] != labels[b]) return labels[a] < labels[b];
                return std::lexicographical_compare(z[a].begin(), z[a].end(), z[b].begin(), z[b].end());
            });
            BinaryProblem pb;
            pb.C = m.C;
            pb.gamma = m.gamma;
            for (auto k : idx) {
                pb.x.push_back(z[k]);
                pb.y.push_back(labels[k] == m.classes[ci] ? 1 : -1);
            }
            const BinarySolution sol = smo_solve(pb, params.tol, params.max_iter);
            BinaryModel bm;
            bm.positive = m.classes[ci];
            bm.negative = m.classes[cj];
            bm.bias = sol.bias;
            for (std::size_t k = 0; k < pb.x.size(); ++k) {
                if (sol.alpha[k] > 0) {
                    bm.support.push_back(pb.x[k]);
                    bm.coef.push_back(sol.alpha[k] * pb.y[k]);
                }
            }
            m.pairs.push_back(std::move(bm));
        }
    return m;
}

Prediction svm_predict(const SvmModel& model, std::span<const double> x) {
    const Vector z = model.standardize(x);
    const std::size_t D = model.classes.size();
    Prediction p;
    p.votes.assign(D, 0);
    p.margins.assign(D, 0.0);
    auto slot = [&](int label) {
        return static_cast<std::size_t>(std::lower_bound(model.classes.begin(), model.classes.end(), label) -
                                        model.classes.begin());
    };
    for (const auto& bm : model.pairs) {
        const double d = bm.decision(z, model.gamma);
        const std::size_t winner = slot(d > 0 ? bm.positive : bm.negative);
        ++p.votes[winner];
        p.margins[winner] += std::abs(d);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < D; ++c) {
        if (p.votes[c] > p.votes[best] || (p.votes[c] == p.votes[best] && p.margins[c] > p.margins[best])) best = c;
    }
    p.label = model.classes[best];
    return p;
}

namespace {
constexpr const char* kSvmMagic = "CFSVM 1";
}

void save_svm(const SvmModel& model, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write svm model " + file.string());
    nlohmann::ordered_json j;
    j["classes"] = model.classes;
    j["C"] = model.C;
    j["gamma"] = model.gamma;
    j["dim"] = model.dim;
    j["mean"] = model.mean;
    j["std"] = model.stddev;
    j["pairs"] = nlohmann::ordered_json::array();
    for (const auto& bm : model.pairs) {
        nlohmann::ordered_json e;
        e["positive"] = bm.positive;
        e["negative"] = bm.negative;
        e["bias"] = bm.bias;
        e["n_support"] = bm.support.size();
        j["pairs"].push_back(e);
    }
    out << kSvmMagic << "\n" << j.dump() << "\n";
    for (const auto& bm : model.pairs) {
        std::vector<double> flat;
        flat.reserve(bm.support.size() * model.dim);
        for (const auto& v : bm.support) flat.insert(flat.end(), v.begin(), v.end());
        const std::uint64_t sv_shape[2] = {bm.support.size(), model.dim};
        write_tensor(out, sv_shape, std::span<const double>(flat));
        const std::uint64_t coef_shape[1] = {bm.coef.size()};
        write_tensor(out, coef_shape, std::span<const double>(bm.coef));
    }
    if (!out) throw IoError("write failed: " + file.string());
}

SvmModel load_svm(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open svm model " + file.string());
    std::string magic, header;
    std::getline(in, magic);
    if (magic != kSvmMagic) throw DecodeError("not an svm model file: " + file.string());
    std::getline(in, header);
    SvmModel m;
    try {
        const auto j = nlohmann::json::parse(header);
        m.classes = j.at("classes").get<std::vector<int>>();
        m.C = j.at("C").get<double>();
        m.gamma = j.at("gamma").get<double>();
        m.dim = j.at("dim").get<std::size_t>();
        m.mean = j.at("mean").get<Vector>();
        m.stddev = j.at("std").get<Vector>();
        for (const auto& e : j.at("pairs")) {
            BinaryModel bm;
            bm.positive = e.at("positive").get<int>();
            bm.negative = e.at("negative").get<int>();
            bm.bias = e.at("bias").get<double>();
            const auto ns = e.at("n_support").get<std::size_t>();
            const StoredTensor sv = read_tensor(in);
            const StoredTensor coef = read_tensor(in);
            if (sv.shape.size() != 2 || sv.shape[0] != ns || sv.shape[1] != m.dim || coef.element_count() != ns)
                throw DecodeError("svm model block shapes do not match header");
            for (std::size_t k = 0; k < ns; ++k)
                bm.support.emplace_back(sv.values.begin() + static_cast<long>(k * m.dim),
                                        sv.values.begin() + static_cast<long>((k + 1) * m.dim));
            bm.coef = coef.values;
            m.pairs.push_back(std::move(bm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("svm model header: " + std::string(e.what()));
    }
    if (m.mean.size() != m.dim || m.stddev.size() != m.dim) throw DecodeError("svm model standardization size mismatch");
    return m;
}

}  // namespace camfp::svm

#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numeric>

#include "camfp/common/error.hpp"
#include "camfp/common/rng.hpp"
#include "camfp/svm/svm.hpp"
#include "support/oracles.hpp"

using namespace camfp;
using namespace camfp::svm;

namespace {

struct Labeled {
    std::vector<Vector> x;
    std::vector<int> y;
};

Labeled toy() { return {{{0, 0}, {0, 1}, {5, 5}, {5, 6}}, {0, 0, 1, 1}}; }

Labeled blobs(std::size_t per_class, std::size_t classes, std::size_t dim, double spread, std::uint64_t seed) {
    CounterRng rng(seed);
    Labeled out;
    for (std::size_t k = 0; k < classes; ++k)
        for (std::size_t i = 0; i < per_class; ++i) {
            Vector v(dim);
            for (std::size_t d = 0; d < dim; ++d) v[d] = (d % classes == k ? 3.0 : 0.0) + spread * rng.normal();
            out.x.push_back(std::move(v));
            out.y.push_back(int(k));
        }
    return out;
}

std::vector<Vector> grid(double lo, double hi, std::size_t steps) {
    std::vector<Vector> g;
    for (std::size_t i = 0; i < steps; ++i)
        for (std::size_t j = 0; j < steps; ++j)
            g.push_back({lo + (hi - lo) * double(i) / double(steps - 1), lo + (hi - lo) * double(j) / double(steps - 1)});
    return g;
}

std::vector<int> predict_all(const SvmModel& m, const std::vector<Vector>& xs) {
    std::vector<int> out;
    for (const auto& x : xs) out.push_back(svm_predict(m, x).label);
    return out;
}

void check_dual_feasible(const SvmModel& m) {
    for (const auto& bm : m.pairs) {
        CHECK(std::abs(bm.alpha_sum_y()) < 1e-6);
        for (double c : bm.coef) {
            CHECK(std::abs(c) > 0);
            CHECK(std::abs(c) <= m.C + 1e-12);
        }
    }
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("rbf kernel examples") {
    const Vector a{0.3, -1.2, 4.0};
    CHECK(rbf_kernel(a, a, 0.7) == 1.0);
    const Vector p{0.0}, q{std::sqrt(std::log(2.0))};
    CHECK(rbf_kernel(p, q, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CounterRng rng(1);
    for (int t = 0; t < 20; ++t) {
        Vector u(5), v(5);
        for (auto& e : u) e = rng.normal();
        for (auto& e : v) e = rng.normal();
        CHECK(std::abs(rbf_kernel(u, v, 0.3) - rbf_kernel(v, u, 0.3)) < 1e-12);
    }
    CHECK_THROWS_AS(rbf_kernel(a, p, 1.0), ShapeError);
    CHECK_THROWS_AS(rbf_kernel(a, a, 0.0), ArgumentError);
}

TEST_CASE("toy set: perfect training accuracy and centroid agreement") {
    const auto d = toy();
    SvmParams params;
    params.C = 10;
    const auto m = svm_train(d.x, d.y, params);
    CHECK(m.classes == std::vector<int>{0, 1});
    REQUIRE(m.pairs.size() == 1);
    const Vector ca{0, 0.5}, cb{5, 5.5};
    for (std::size_t i = 0; i < 4; ++i) {
        const int centroid = rbf_kernel(d.x[i], ca, 1.0) > rbf_kernel(d.x[i], cb, 1.0) ? 0 : 1;
        CHECK(svm_predict(m, d.x[i]).label == d.y[i]);
        CHECK(svm_predict(m, d.x[i]).label == centroid);
    }
    check_dual_feasible(m);
    CHECK(svm_predict(m, Vector{-1, 0.5}).label == 0);
    CHECK(svm_predict(m, Vector{6, 5.5}).label == 1);
}

TEST_CASE("SMO agrees with a brute-force dual solution on small problems") {
    CounterRng rng(2);
    for (int trial = 0; trial < 8; ++trial) {
        BinaryProblem pb;
        const std::size_t n = 4 + rng.below(3);
        for (std::size_t i = 0; i < n; ++i) {
            const int y = i % 2 ? 1 : -1;
            pb.x.push_back({y * 0.8 + rng.normal(), rng.normal()});
            pb.y.push_back(y);
        }
        pb.C = trial % 2 ? 1.0 : 10.0;
        pb.gamma = 0.5;
        const auto smo = smo_solve(pb, 1e-8, 100000);
        CHECK(smo.converged);
        const auto ref = oracle::dual_grid_search(pb);
        double smo_obj = 0, q = 0;
        for (std::size_t i = 0; i < n; ++i) {
            smo_obj += smo.alpha[i];
            for (std::size_t j = 0; j < n; ++j)
                q += smo.alpha[i] * smo.alpha[j] * pb.y[i] * pb.y[j] * rbf_kernel(pb.x[i], pb.x[j], pb.gamma);
        }
        smo_obj -= 0.5 * q;
        CHECK(smo_obj >= ref.objective - 1e-6);
        double sum_y = 0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(smo.alpha[i] >= 0);
            CHECK(smo.alpha[i] <= pb.C);
            sum_y += smo.alpha[i] * pb.y[i];
        }
        CHECK(std::abs(sum_y) < 1e-6);
        int agree = 0, total = 0;
        for (double u = -3; u <= 3; u += 0.5)
            for (double v = -3; v <= 3; v += 0.5) {
                double f = smo.bias;
                for (std::size_t i = 0; i < n; ++i) f += smo.alpha[i] * pb.y[i] * rbf_kernel(pb.x[i], Vector{u, v}, pb.gamma);
                const double g = oracle::dual_decision(pb, ref, {u, v});
                if (std::abs(g) < 1e-3) continue;
                ++total;
                agree += (f > 0) == (g > 0);
            }
        CHECK(agree == total);
    }
}

TEST_CASE("duplicating every sample leaves predictions unchanged") {
    for (const auto& d : {toy(), blobs(10, 3, 2, 0.5, 3)}) {
        Labeled dup = d;
        dup.x.insert(dup.x.end(), d.x.begin(), d.x.end());
        dup.y.insert(dup.y.end(), d.y.begin(), d.y.end());
        // the invariance is a property of the optimum, so solve well past the default tolerance
        SvmParams tight;
        tight.tol = 1e-8;
        const auto g = grid(-2, 7, 15);
        CHECK(predict_all(svm_train(d.x, d.y, tight), g) == predict_all(svm_train(dup.x, dup.y, tight), g));
    }
}

TEST_CASE("scaling the features by 10 leaves labels unchanged") {
    const auto d = blobs(12, 3, 4, 0.8, 4);
    auto scaled = d.x;
    for (auto& v : scaled)
        for (auto& e : v) e *= 10;
    const auto a = svm_train(d.x, d.y), b = svm_train(scaled, d.y);
    const auto probe = blobs(5, 3, 4, 1.5, 5);
    for (const auto& x : probe.x) {
        Vector xs = x;
        for (auto& e : xs) e *= 10;
        CHECK(svm_predict(a, x).label == svm_predict(b, xs).label);
    }
}

TEST_CASE("predictions do not depend on training order") {
    const auto d = blobs(10, 3, 3, 1.0, 6);
    std::vector<std::size_t> perm(d.x.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CounterRng rng(7);
    rng.shuffle(std::span<std::size_t>(perm));
    Labeled p;
    for (auto i : perm) {
        p.x.push_back(d.x[i]);
        p.y.push_back(d.y[i]);
    }
    const auto probe = blobs(8, 3, 3, 2.0, 8);
    CHECK(predict_all(svm_train(d.x, d.y), probe.x) == predict_all(svm_train(p.x, p.y), probe.x));
}

TEST_CASE("two classes: a single decision whose sign is the label") {
    const auto d = blobs(10, 2, 3, 1.0, 9);
    const auto m = svm_train(d.x, d.y);
    REQUIRE(m.pairs.size() == 1);
    const auto probe = blobs(10, 2, 3, 2.0, 10);
    for (const auto& x : probe.x) {
        const auto p = svm_predict(m, x);
        CHECK(p.votes[0] + p.votes[1] == 1);
        const double f = m.pairs[0].decision(m.standardize(x), m.gamma);
        CHECK(p.label == (f > 0 ? m.pairs[0].positive : m.pairs[0].negative));
    }
}

TEST_CASE("multi-class votes and dual constraints") {
    const auto d = blobs(15, 4, 4, 0.7, 11);
    const auto m = svm_train(d.x, d.y);
    CHECK(m.pairs.size() == 6);
    check_dual_feasible(m);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
        const auto p = svm_predict(m, d.x[i]);
        CHECK(std::accumulate(p.votes.begin(), p.votes.end(), std::size_t{0}) == 6);
        correct += p.label == d.y[i];
    }
    CHECK(double(correct) / double(d.x.size()) >= 0.95);
    for (double s : m.stddev) CHECK(s > 0);
}

TEST_CASE("auto gamma and arbitrary labels") {
    Labeled d = blobs(6, 3, 5, 1.0, 12);
    for (auto& y : d.y) y = y * 10 + 7;
    const auto m = svm_train(d.x, d.y);
    CHECK(m.classes == std::vector<int>{7, 17, 27});
    CHECK(m.gamma == doctest::Approx(1.0 / 5).epsilon(1e-9));
    for (std::size_t i = 0; i < d.x.size(); ++i) CHECK(svm_predict(m, d.x[i]).label == d.y[i]);
}

TEST_CASE("constant features are floored rather than divided by zero") {
    Labeled d = toy();
    for (auto& v : d.x) v.push_back(3.0);
    const auto m = svm_train(d.x, d.y);
    CHECK(m.stddev[2] == 1e-8);
    for (std::size_t i = 0; i < 4; ++i) CHECK(svm_predict(m, d.x[i]).label == d.y[i]);
}

TEST_CASE("training errors") {
    Labeled d = toy();
    std::vector<int> one(4, 1);
    CHECK_THROWS_AS(svm_train(d.x, one), ArgumentError);
    d.x[2][1] = std::nan("");
    CHECK_THROWS_AS(svm_train(d.x, d.y), DataError);
    d = toy();
    SvmParams bad;
    bad.C = 0;
    CHECK_THROWS_AS(svm_train(d.x, d.y, bad), ArgumentError);
    bad = SvmParams{};
    bad.gamma = -1.0;
    CHECK_THROWS_AS(svm_train(d.x, d.y, bad), ArgumentError);
    const auto m = svm_train(d.x, d.y);
    CHECK_THROWS_AS(svm_predict(m, Vector{1, 2, 3}), ShapeError);
}

TEST_CASE("model file round trip") {
    oracle::TempDir dir("svm");
    const auto d = blobs(8, 3, 4, 1.0, 13);
    SvmParams params;
    params.gamma = 0.3;
    params.C = 2.5;
    const auto m = svm_train(d.x, d.y, params);
    save_svm(m, dir.path / "m.svm");
    const auto back = load_svm(dir.path / "m.svm");
    CHECK(back.classes == m.classes);
    CHECK(back.C == 2.5);
    CHECK(back.gamma == 0.3);
    CHECK(back.mean == m.mean);
    CHECK(back.stddev == m.stddev);
    REQUIRE(back.pairs.size() == m.pairs.size());
    for (std::size_t k = 0; k < m.pairs.size(); ++k) {
        CHECK(back.pairs[k].support == m.pairs[k].support);
        CHECK(back.pairs[k].coef == m.pairs[k].coef);
        CHECK(back.pairs[k].bias == m.pairs[k].bias);
    }
    const auto probe = blobs(6, 3, 4, 2.0, 14);
    for (const auto& x : probe.x) {
        const auto a = svm_predict(m, x), b = svm_predict(back, x);
        CHECK(a.label == b.label);
        CHECK(a.margins == b.margins);
    }
    std::ofstream(dir.path / "junk.svm") << "nope\n";
    CHECK_THROWS_AS(load_svm(dir.path / "junk.svm"), DecodeError);
    CHECK_THROWS_AS(load_svm(dir.path / "missing.svm"), IoError);
}

}  // TEST_SUITE

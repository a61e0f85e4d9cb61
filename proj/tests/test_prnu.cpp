#include "doctest.h"

#include <numeric>

#include "camfp/common/error.hpp"
#include "camfp/prnu/prnu.hpp"
#include "camfp/simcam/simcam.hpp"
#include "support/oracles.hpp"

using namespace camfp;
using prnu::NoiseResidual;

namespace {

Plane shifted(const Plane& p, std::size_t dr, std::size_t dc) {
    Plane out(p.rows, p.cols);
    for (std::size_t r = 0; r < p.rows; ++r)
        for (std::size_t c = 0; c < p.cols; ++c) out((r + dr) % p.rows, (c + dc) % p.cols) = p(r, c);
    return out;
}

double mean_of(const Plane& p) { return std::accumulate(p.data.begin(), p.data.end(), 0.0) / double(p.size()); }

struct SmallRig {
    sim::DeviceOptions opts;
    sim::DeviceProfile a, b;
    SmallRig() {
        opts.height = opts.width = 256;
        a = sim::make_device("m0", 0, 11, opts);
        b = sim::make_device("m0", 1, 11, opts);
    }
    img::Image shot(const sim::DeviceProfile& d, std::uint64_t k, sim::SceneKind kind = sim::SceneKind::texture) const {
        return sim::capture(sim::render_scene({kind, 256, 256, k}), d, {}, k + 1000 * d.device_index);
    }
};

}  // namespace

TEST_SUITE("prnu") {

TEST_CASE("ncc examples") {
    const Plane x = oracle::random_plane(64, 64, 1);
    Plane neg = x;
    for (auto& v : neg.data) v = -v;
    CHECK(prnu::ncc(x, x) == doctest::Approx(1.0));
    CHECK(prnu::ncc(x, neg) == doctest::Approx(-1.0));
    for (std::uint64_t s = 0; s < 10; ++s)
        CHECK(std::abs(prnu::ncc(oracle::random_plane(64, 64, 100 + s), oracle::random_plane(64, 64, 200 + s))) < 0.1);
    CHECK(prnu::ncc(Plane(4, 4, 2.0), x.rows == 64 ? Plane(4, 4, 1.0) : Plane()) == 0.0);
    CHECK_THROWS_AS(prnu::ncc(x, Plane(3, 3)), ShapeError);
}

TEST_CASE("pce self match peaks at zero shift") {
    const Plane x = oracle::random_plane(64, 64, 2);
    const auto rep = prnu::pce(x, x);
    CHECK(rep.pce > 1000);
    CHECK(rep.peak_row == 0);
    CHECK(rep.peak_col == 0);
    CHECK(rep.matched);
}

TEST_CASE("pce of independent white noise is small on average") {
    double total = 0;
    for (std::uint64_t t = 0; t < 30; ++t)
        total += prnu::pce(oracle::random_plane(16, 16, 300 + t), oracle::random_plane(16, 16, 400 + t)).pce;
    CHECK(total / 30 < 10);
    // Larger surfaces: the peak is the extreme of m*n near-Gaussian samples, E[PCE] < 2 ln(mn).
    total = 0;
    for (std::uint64_t t = 0; t < 30; ++t) {
        const double p = prnu::pce(oracle::random_plane(64, 64, 300 + t), oracle::random_plane(64, 64, 400 + t)).pce;
        CHECK(p < 50);
        total += p;
    }
    CHECK(total / 30 < 2 * std::log(64.0 * 64.0));
}

TEST_CASE("pce equals the brute-force spatial oracle") {
    for (std::uint64_t t = 0; t < 5; ++t) {
        Plane a = oracle::random_plane(32, 32, 500 + t), b = oracle::random_plane(32, 32, 600 + t);
        if (t % 2) {
            const Plane base = oracle::random_plane(32, 32, 700 + t);
            a = shifted(base, 3 + t, 29 - t);
            for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += 0.5 * b.data[i];
            b = base;
        }
        const auto fast = prnu::pce(a, b);
        const auto slow = oracle::brute_force_pce(a, b, 5);
        CHECK(fast.pce == doctest::Approx(slow.pce).epsilon(1e-6));
        CHECK(fast.peak_row == slow.row);
        CHECK(fast.peak_col == slow.col);
    }
}

TEST_CASE("pce is invariant to positive scaling") {
    const Plane base = oracle::random_plane(48, 40, 8);
    Plane r = base, f = base;
    const Plane n = oracle::random_plane(48, 40, 9);
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] += 2 * n.data[i];
    const double p0 = prnu::pce(r, f).pce;
    for (auto& v : r.data) v *= 3.5;
    for (auto& v : f.data) v *= 0.02;
    CHECK(prnu::pce(r, f).pce == doctest::Approx(p0).epsilon(1e-9));
}

TEST_CASE("shifting the residual moves the peak") {
    const Plane f = oracle::random_plane(40, 56, 10);
    Plane r = f;
    const Plane n = oracle::random_plane(40, 56, 11);
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] += n.data[i];
    const auto base = prnu::pce(r, f);
    const auto moved = prnu::pce(shifted(r, 7, 13), f);
    CHECK(moved.peak_row == (base.peak_row + 7) % 40);
    CHECK(moved.peak_col == (base.peak_col + 13) % 56);
    CHECK(moved.pce == doctest::Approx(base.pce).epsilon(1e-6));
}

TEST_CASE("pce decision follows the threshold and sizes must match") {
    const Plane a = oracle::random_plane(32, 32, 12), b = oracle::random_plane(32, 32, 13);
    const auto rep = prnu::pce(a, b, 5, 1e-3);
    CHECK(rep.matched == (rep.pce >= 1e-3));
    CHECK(rep.threshold == 1e-3);
    CHECK_THROWS_WITH_AS(prnu::pce(a, Plane(32, 16)), doctest::Contains("resample"), ShapeError);
}

TEST_CASE("residual of a constant image is zero") {
    const img::Image c(64, 64, 3, 0.4f);
    for (double v : prnu::extract_residual(c, {}).plane.data) CHECK(std::abs(v) < 1e-9);
    CHECK_THROWS_AS(prnu::extract_residual(img::Image(8, 8, 3), {}), ShapeError);
}

TEST_CASE("residuals are zero mean along rows and columns and deterministic") {
    const img::Image im = oracle::random_image(48, 64, 3, 14);
    const auto r1 = prnu::extract_residual(im, {}, "x");
    const auto r2 = prnu::extract_residual(im, {}, "x");
    CHECK(r1.plane.data == r2.plane.data);
    CHECK(r1.source_id == "x");
    CHECK(std::abs(mean_of(r1.plane)) < 1e-6);
    for (std::size_t r = 0; r < 48; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < 64; ++c) s += r1.plane(r, c);
        CHECK(std::abs(s / 64) < 1e-9);
    }
}

TEST_CASE("residual correlates with the injected pattern") {
    SmallRig rig;
    const auto res = prnu::extract_residual(rig.shot(rig.a, 1), {});
    const double own = prnu::ncc(res.plane, rig.a.prnu), other = prnu::ncc(res.plane, rig.b.prnu);
    CHECK(own > 0);
    CHECK(own > 5 * std::abs(other));
}

TEST_CASE("build_reference examples") {
    const auto r = prnu::extract_residual(oracle::random_image(32, 32, 3, 15), {});
    std::vector<NoiseResidual> same(50, r);
    const auto ref = prnu::build_reference(same, "d", prnu::FingerprintKind::natural);
    CHECK(ref.n_images == 50);
    for (std::size_t i = 0; i < r.plane.size(); ++i) CHECK(ref.plane.data[i] == doctest::Approx(r.plane.data[i]));
    NoiseResidual neg = r;
    for (auto& v : neg.plane.data) v = -v;
    std::vector<NoiseResidual> pair{r, neg};
    for (double v : prnu::build_reference(pair, "d", prnu::FingerprintKind::flat).plane.data) CHECK(std::abs(v) < 1e-12);
    CHECK_THROWS_AS(prnu::build_reference(std::vector<NoiseResidual>{}, "d", prnu::FingerprintKind::natural),
                    ArgumentError);
    std::vector<NoiseResidual> bad{r, prnu::extract_residual(oracle::random_image(32, 48, 3, 16), {})};
    CHECK_THROWS_AS(prnu::build_reference(bad, "d", prnu::FingerprintKind::natural), ShapeError);
}

TEST_CASE("build_reference is permutation invariant") {
    std::vector<NoiseResidual> rs;
    for (std::uint64_t k = 0; k < 5; ++k) rs.push_back(prnu::extract_residual(oracle::random_image(32, 32, 3, 20 + k), {}));
    const auto a = prnu::build_reference(rs, "d", prnu::FingerprintKind::natural);
    std::reverse(rs.begin(), rs.end());
    std::swap(rs[1], rs[3]);
    const auto b = prnu::build_reference(rs, "d", prnu::FingerprintKind::natural);
    for (std::size_t i = 0; i < a.plane.size(); ++i) CHECK(a.plane.data[i] == doctest::Approx(b.plane.data[i]).epsilon(1e-12));
}

TEST_CASE("averaging residuals improves the fingerprint estimate") {
    SmallRig rig;
    std::vector<NoiseResidual> rs;
    double best_single = -1;
    for (std::uint64_t k = 0; k < 20; ++k) {
        rs.push_back(prnu::extract_residual(rig.shot(rig.a, 50 + k), {}));
        best_single = std::max(best_single, prnu::ncc(rs.back().plane, rig.a.prnu));
    }
    const auto ref = prnu::build_reference(rs, rig.a.device_id, prnu::FingerprintKind::natural);
    CHECK(prnu::ncc(ref.plane, rig.a.prnu) > best_single);
    CHECK(std::abs(mean_of(ref.plane)) < 1e-6);
}

TEST_CASE("fingerprint file round trip") {
    oracle::TempDir tmp("fp");
    prnu::ReferenceFingerprint ref;
    ref.device_id = "m1-d0";
    ref.kind = prnu::FingerprintKind::flat;
    ref.n_images = 7;
    ref.plane = oracle::random_plane(9, 13, 17);
    prnu::save_fingerprint(ref, tmp.path / "fp");
    CHECK(std::filesystem::exists(tmp.path / "fp.cftr"));
    const auto back = prnu::load_fingerprint(tmp.path / "fp");
    CHECK(back.device_id == "m1-d0");
    CHECK(back.kind == prnu::FingerprintKind::flat);
    CHECK(back.n_images == 7);
    CHECK(back.plane.rows == 9);
    CHECK(back.plane.data == ref.plane.data);
    CHECK_THROWS_AS(prnu::load_fingerprint(tmp.path / "missing"), IoError);
}

TEST_CASE("matching, non-matching and down-sampled paths at full resolution") {
    sim::DeviceOptions opts;
    const auto a = sim::make_device("m0", 0, 5, opts), b = sim::make_device("m0", 1, 5, opts);
    auto shot = [&](const sim::DeviceProfile& d, std::uint64_t k) {
        return sim::capture(sim::render_scene({sim::SceneKind::texture, 896, 896, k}), d, {}, k);
    };
    std::vector<NoiseResidual> rs;
    for (std::uint64_t k = 0; k < 8; ++k) rs.push_back(prnu::extract_residual(shot(a, k), {}));
    const auto ref = prnu::build_reference(rs, a.device_id, prnu::FingerprintKind::natural);
    const img::Image own = shot(a, 99), other = shot(b, 98);
    prnu::PipelineParams pp;
    CHECK(prnu::pce_pipeline_direct(own, ref, pp).matched);
    CHECK_FALSE(prnu::pce_pipeline_direct(other, ref, pp).matched);
    CHECK_FALSE(prnu::pce_pipeline_downsampled(own, ref, pp).matched);
    CHECK_FALSE(prnu::pce_pipeline_downsampled(other, ref, pp).matched);
}

}

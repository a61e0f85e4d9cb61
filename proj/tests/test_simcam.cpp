#include "doctest.h"

#include <fstream>
#include <map>
#include <numeric>

#include "camfp/common/error.hpp"
#include "camfp/eval/manifest.hpp"
#include "camfp/prnu/prnu.hpp"
#include "camfp/sampling/sampling.hpp"
#include "camfp/simcam/simcam.hpp"
#include "support/oracles.hpp"

using namespace camfp;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size());
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("simcam") {

TEST_CASE("device prnu is normalized and regeneration is deterministic") {
    sim::DeviceOptions o;
    o.height = 128;
    o.width = 96;
    const auto d = sim::make_device("m2", 1, 77, o);
    CHECK(std::abs(mean(d.prnu.data)) < 1e-6);
    CHECK(std::abs(variance(d.prnu.data) - 1.0) < 1e-3);
    const auto again = sim::make_device("m2", 1, 77, o);
    CHECK(again.prnu.data == d.prnu.data);
    CHECK(again.channel_gains == d.channel_gains);
    CHECK(again.response_gamma == d.response_gamma);
    CHECK(again.vignette_strength == d.vignette_strength);
    CHECK(d.device_id == "m2-d1");
    CHECK(d.model_id == "m2");
    for (int c = 0; c < 3; ++c) {
        CHECK(d.channel_gains[c] > 0);
        CHECK(d.response_gamma[c] > 0);
    }
}

TEST_CASE("same-model devices share a base and differ by device offsets") {
    sim::DeviceOptions o;
    o.height = o.width = 64;
    const auto a = sim::make_device("m0", 0, 3, o), b = sim::make_device("m0", 1, 3, o);
    CHECK(prnu::ncc(a.prnu, b.prnu) < 0.1);
    CHECK(a.channel_gains != b.channel_gains);
    CHECK(sim::gain_distance(a, b) > sim::kMinSameModelGainDistance);
    o.device_offset_scale = 0;
    const auto a0 = sim::make_device("m0", 0, 3, o), b0 = sim::make_device("m0", 1, 3, o);
    CHECK(a0.channel_gains == b0.channel_gains);
    CHECK(a0.response_gamma == b0.response_gamma);
    CHECK(a0.vignette_strength == b0.vignette_strength);
}

TEST_CASE("highpass pattern has no low-frequency content") {
    const Plane p = sim::highpass_pattern(64, 64, 0.2, 9);
    CHECK(std::abs(mean(p.data)) < 1e-6);
    CHECK(std::abs(variance(p.data) - 1.0) < 1e-3);
    Plane smooth(64, 64);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) smooth(r, c) = std::sin(6.283 * r / 64.0) + std::cos(6.283 * 3 * c / 64.0);
    CHECK(std::abs(prnu::ncc(p, smooth)) < 1e-9);
}

TEST_CASE("scenes are deterministic and within range") {
    for (auto kind : {sim::SceneKind::gradient, sim::SceneKind::texture, sim::SceneKind::shapes, sim::SceneKind::flatfield}) {
        const sim::SceneSpec spec{kind, 224, 224, 5};
        const auto a = sim::render_scene(spec), b = sim::render_scene(spec);
        CHECK(a.data == b.data);
        const auto [lo, hi] = std::minmax_element(a.data.begin(), a.data.end());
        CHECK(*lo >= 0.05f);
        CHECK(*hi <= 0.95f);
        CHECK(sim::scene_kind_from_string(sim::to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(sim::scene_kind_from_string("cloudy"), ArgumentError);
}

TEST_CASE("flatfield scenes are flat and textures are correlated") {
    const auto flat = sim::render_scene({sim::SceneKind::flatfield, 448, 448, 1});
    std::vector<double> v(flat.data.begin(), flat.data.end());
    CHECK(std::sqrt(variance(v)) < 0.02);
    for (std::uint64_t s = 0; s < 3; ++s) {
        const auto tex = sim::render_scene({sim::SceneKind::texture, 448, 448, s});
        CHECK(sampling::mean_abs_autocorrelation(tex, 1) > 0.8);
    }
}

TEST_CASE("degenerate profiles capture identically") {
    sim::DeviceOptions o;
    o.height = o.width = 64;
    o.prnu_strength = 0;
    o.device_offset_scale = 0;
    o.noise_sigma = 0;
    const auto a = sim::make_device("m0", 0, 3, o), b = sim::make_device("m0", 1, 3, o);
    const auto scene = sim::render_scene({sim::SceneKind::shapes, 64, 64, 4});
    CHECK(sim::capture(scene, a).data == sim::capture(scene, b).data);
}

TEST_CASE("capture is monotone in the scene value") {
    sim::DeviceOptions o;
    o.height = o.width = 32;
    const auto d = sim::make_device("m1", 0, 8, o);
    img::Image prev;
    for (float level : {0.1f, 0.3f, 0.5f, 0.7f}) {
        const img::Image s(32, 32, 3, level);
        const auto out = sim::capture(s, d, {}, 42);
        if (!prev.empty())
            for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] >= prev.data[i]);
        prev = out;
    }
    CHECK_THROWS_AS(sim::capture(img::Image(16, 16, 3), d), ShapeError);
}

TEST_CASE("flat-field residual carries its own prnu and not another's") {
    const sim::DeviceOptions o;
    const auto a = sim::make_device("m0", 0, 21, o), b = sim::make_device("m0", 1, 21, o);
    const auto scene = sim::render_scene({sim::SceneKind::flatfield, 896, 896, 2});
    const auto shot = sim::capture(scene, a, {}, 5);
    const auto res = prnu::extract_residual(shot, {});
    CHECK(prnu::ncc(res.plane, a.prnu) > 0.2);
    CHECK(std::abs(prnu::ncc(res.plane, b.prnu)) < 0.02);
    const auto up = img::resize_bilinear(img::resize_bilinear(shot, 224, 224), 896, 896);
    CHECK(std::abs(prnu::ncc(prnu::extract_residual(up, {}).plane, a.prnu)) < 0.02);
}

TEST_CASE("simulate_dataset layout, split and determinism") {
    oracle::TempDir t1("sim1"), t2("sim2");
    sim::SimulationConfig cfg;
    cfg.n_models = 2;
    cfg.devices_per_model = 2;
    cfg.images_per_device = 8;
    cfg.device.height = cfg.device.width = 64;
    const auto m = sim::simulate_dataset(cfg, t1.path);
    CHECK(m.rows.size() == 32);
    CHECK(m.device_count() == 4);
    std::map<std::string, int> train;
    for (const auto& r : m.rows) {
        CHECK(std::filesystem::exists(m.resolve(r)));
        if (r.split == eval::Split::train) train[r.device_id]++;
        CHECK(r.split != eval::Split::unassigned);
    }
    for (const auto& [d, n] : train) CHECK(n == 6);
    CHECK(std::filesystem::exists(t1.path / "manifest.jsonl"));
    CHECK(std::filesystem::exists(t1.path / "devices.json"));
    const auto reloaded = eval::load_manifest(t1.path / "manifest.jsonl");
    CHECK(reloaded.rows.size() == 32);

    cfg.jobs = 3;
    sim::simulate_dataset(cfg, t2.path);
    CHECK(read_all(t1.path / "manifest.jsonl") == read_all(t2.path / "manifest.jsonl"));
    for (const auto& r : m.rows) CHECK(read_all(t1.path / r.path) == read_all(t2.path / r.path));
}

TEST_CASE("3x2x40 dataset arithmetic") {
    sim::SimulationConfig cfg;
    const auto devs = sim::make_devices(cfg);
    CHECK(devs.size() == 6);
    for (std::size_t i = 0; i < devs.size(); ++i)
        for (std::size_t j = i + 1; j < devs.size(); ++j)
            if (devs[i].model_id == devs[j].model_id) CHECK(sim::gain_distance(devs[i], devs[j]) > 0.01);
}

TEST_CASE("simulation options are validated") {
    sim::DeviceOptions o;
    o.prnu_cutoff = 0.5;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    o = {};
    o.noise_sigma = -1;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
    oracle::TempDir t("simbad");
    sim::SimulationConfig cfg;
    cfg.images_per_device = 0;
    CHECK_THROWS_AS(sim::simulate_dataset(cfg, t.path), ArgumentError);
}

}

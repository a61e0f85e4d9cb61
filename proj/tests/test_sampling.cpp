#include "doctest.h"

#include <fstream>
#include <map>
#include <set>

#include "camfp/common/error.hpp"
#include "camfp/sampling/sampling.hpp"
#include "camfp/simcam/simcam.hpp"
#include "support/oracles.hpp"

using namespace camfp;
using sampling::SamplingMode;
using sampling::SamplingPlan;

namespace {

// Every pixel carries a unique RGB triple encoding its raster index.
img::Image coded_image(std::size_t h, std::size_t w) {
    img::Image im(h, w, 3);
    for (std::size_t i = 0; i < h * w; ++i) {
        im.data[3 * i] = float(i % 256) / 255.0f;
        im.data[3 * i + 1] = float((i / 256) % 256) / 255.0f;
        im.data[3 * i + 2] = float(i / 65536) / 255.0f;
    }
    return im;
}

std::size_t decode(const img::Image& p, std::size_t px) {
    auto byte = [&](std::size_t ch) { return std::size_t(std::lround(p.data[3 * px + ch] * 255.0f)); };
    return byte(0) + 256 * byte(1) + 65536 * byte(2);
}

std::multiset<std::array<float, 3>> pixels(const img::Image& im) {
    std::multiset<std::array<float, 3>> s;
    for (std::size_t i = 0; i < im.pixel_count(); ++i) s.insert({im.data[3 * i], im.data[3 * i + 1], im.data[3 * i + 2]});
    return s;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

SamplingPlan plan(SamplingMode mode, std::size_t n, std::uint64_t seed) {
    SamplingPlan p;
    p.mode = mode;
    p.patches_per_image = n;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("down_patch examples") {
    const img::Image c(448, 448, 3, 0.3f);
    const auto p = sampling::down_patch(c);
    CHECK(p.data.height == 224);
    CHECK(p.data.width == 224);
    CHECK(p.data.channels == 3);
    CHECK(p.mode == SamplingMode::down);
    for (float v : p.data.data) CHECK(v == doctest::Approx(0.3f));
    const img::Image r = oracle::random_image(224, 224, 3, 1);
    const auto same = sampling::down_patch(r);
    for (std::size_t i = 0; i < r.data.size(); ++i) CHECK(std::abs(same.data.data[i] - r.data[i]) < 1e-6);
    CHECK_THROWS_AS(sampling::down_patch(img::Image(448, 448, 1)), ShapeError);
}

TEST_CASE("random_orig of a constant image gives constant patches") {
    const img::Image c(448, 448, 3, 0.7f);
    const auto ps = sampling::random_patches_from_original(c, plan(SamplingMode::random_orig, 4, 3), "c");
    CHECK(ps.size() == 4);
    for (const auto& p : ps)
        for (float v : p.data.data) CHECK(v == 0.7f);
}

TEST_CASE("random_orig never reuses a coordinate") {
    const img::Image im = coded_image(448, 672);
    const auto ps = sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 6, 9), "img");
    REQUIRE(ps.size() == 6);
    std::set<std::size_t> seen;
    std::multiset<std::array<float, 3>> drawn;
    for (std::size_t k = 0; k < ps.size(); ++k) {
        CHECK(ps[k].patch_index == k);
        CHECK(ps[k].source_image_id == "img");
        for (std::size_t px = 0; px < sampling::kPatchPixels; ++px) {
            const std::size_t idx = decode(ps[k].data, px);
            CHECK_MESSAGE(idx < 448 * 672, "decoded index out of range");
            seen.insert(idx);
            drawn.insert({im.data[3 * idx], im.data[3 * idx + 1], im.data[3 * idx + 2]});
        }
    }
    CHECK(seen.size() == 6 * sampling::kPatchPixels);
    std::multiset<std::array<float, 3>> got;
    for (const auto& p : ps) {
        const auto s = pixels(p.data);
        got.insert(s.begin(), s.end());
    }
    CHECK(got == drawn);
}

TEST_CASE("random_orig is deterministic per seed and image") {
    const img::Image im = coded_image(448, 448);
    const auto a = sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 2, 1), "x");
    const auto b = sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 2, 1), "x");
    for (std::size_t k = 0; k < 2; ++k) CHECK(a[k].data.data == b[k].data.data);
    std::set<std::vector<float>> distinct{a[0].data.data};
    for (std::uint64_t s = 2; s <= 5; ++s)
        distinct.insert(sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 1, s), "x")[0].data.data);
    CHECK(distinct.size() == 5);
    const auto other = sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 1, 1), "y");
    CHECK(other[0].data.data != a[0].data.data);
    const auto one = sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 1, 1), "x");
    CHECK(one[0].data.data == a[0].data.data);
}

TEST_CASE("random_orig capacity error reports the feasible count") {
    const img::Image im(448, 560, 3);
    try {
        sampling::random_patches_from_original(im, plan(SamplingMode::random_orig, 6, 1), "small");
        FAIL("expected CapacityError");
    } catch (const CapacityError& e) {
        CHECK(e.max_feasible() == 448 * 560 / 50176);
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
    CHECK(sampling::max_random_patches(896, 896) == 16);
}

TEST_CASE("random_down patches are permutations of the down-sampled image") {
    const img::Image src = oracle::smooth_image(448, 448, 3);
    const auto down = sampling::down_patch(src);
    const auto ps = sampling::random_patches_from_downsampled(src, plan(SamplingMode::random_down, 3, 4), "s");
    REQUIRE(ps.size() == 3);
    const auto ref = pixels(down.data);
    for (const auto& p : ps) {
        CHECK(p.mode == SamplingMode::random_down);
        CHECK(pixels(p.data) == ref);
    }
    CHECK(ps[0].data.data != ps[1].data.data);

    const img::Image coded = coded_image(224, 224);
    for (const auto& p : sampling::random_patches_from_downsampled(coded, plan(SamplingMode::random_down, 2, 5), "c")) {
        std::set<std::size_t> idx;
        for (std::size_t px = 0; px < sampling::kPatchPixels; ++px) idx.insert(decode(p.data, px));
        CHECK(idx.size() == sampling::kPatchPixels);
    }
    const img::Image flat(448, 448, 3, 0.25f);
    for (float v : sampling::random_patches_from_downsampled(flat, plan(SamplingMode::random_down, 1, 1), "f")[0].data.data)
        CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("random_down is reproducible per seed, image and index") {
    const img::Image src = oracle::random_image(448, 448, 3, 6);
    const auto a = sampling::random_patches_from_downsampled(src, plan(SamplingMode::random_down, 3, 8), "i");
    const auto b = sampling::random_patches_from_downsampled(src, plan(SamplingMode::random_down, 5, 8), "i");
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a[k].data.data == b[k].data.data);
        CHECK(a[k].seed == b[k].seed);
    }
    CHECK(a[0].seed != a[1].seed);
}

TEST_CASE("random modes destroy spatial structure") {
    for (std::uint64_t s = 0; s < 2; ++s) {
        const auto scene = sim::render_scene({sim::SceneKind::texture, 896, 896, s});
        REQUIRE(sampling::mean_abs_autocorrelation(scene, 1) > 0.8);
        for (const auto& p : sampling::random_patches_from_original(scene, plan(SamplingMode::random_orig, 2, s), "t"))
            CHECK(sampling::mean_abs_autocorrelation(p.data, 4) < 0.05);
        for (const auto& p : sampling::random_patches_from_downsampled(scene, plan(SamplingMode::random_down, 2, s), "t"))
            CHECK(sampling::mean_abs_autocorrelation(p.data, 4) < 0.05);
    }
}

TEST_CASE("plan validation and mode names") {
    SamplingPlan p;
    p.patches_per_image = 0;
    CHECK_THROWS_AS(p.validate(), ArgumentError);
    for (auto m : {SamplingMode::down, SamplingMode::random_orig, SamplingMode::random_down})
        CHECK(sampling::sampling_mode_from_string(sampling::to_string(m)) == m);
    CHECK_THROWS_AS(sampling::sampling_mode_from_string("tiles"), ArgumentError);
    const auto one = sampling::make_patches(oracle::random_image(448, 448, 3, 1), plan(SamplingMode::down, 50, 3), "a", "d");
    CHECK(one.size() == 1);
    CHECK(one[0].device_id == "d");
}

TEST_CASE("patch files and index round trip") {
    oracle::TempDir tmp("patch");
    sampling::Patch p = sampling::down_patch(oracle::random_image(448, 448, 3, 2));
    sampling::save_patch(p, tmp.path / "p.cftr");
    CHECK(sampling::load_patch(tmp.path / "p.cftr").data == p.data.data);

    sampling::PatchIndex idx;
    idx.root = tmp.path;
    idx.rows.push_back({"p.cftr", "m0-d1", "images/a.png", SamplingMode::random_down, 3, 12345678901234ULL, eval::Split::test});
    sampling::save_patch_index(idx, tmp.path / "index.jsonl");
    const auto back = sampling::load_patch_index(tmp.path / "index.jsonl");
    REQUIRE(back.rows.size() == 1);
    const auto& r = back.rows[0];
    CHECK(r.patch_file == "p.cftr");
    CHECK(r.device_id == "m0-d1");
    CHECK(r.source_image_id == "images/a.png");
    CHECK(r.mode == SamplingMode::random_down);
    CHECK(r.patch_index == 3);
    CHECK(r.seed == 12345678901234ULL);
    CHECK(r.split == eval::Split::test);
    CHECK(back.resolve(r) == tmp.path / "p.cftr");
}

TEST_CASE("patch datasets inherit splits and are identical across worker counts") {
    oracle::TempDir data("pds"), o1("pd1"), o2("pd2");
    sim::SimulationConfig cfg;
    cfg.n_models = 1;
    cfg.devices_per_model = 2;
    cfg.images_per_device = 4;
    cfg.device.height = cfg.device.width = 448;
    const auto m = sim::simulate_dataset(cfg, data.path);
    sampling::PatchJob job;
    job.plan = plan(SamplingMode::random_orig, 2, 7);
    job.jobs = 1;
    const auto a = sampling::build_patch_dataset(m, job, o1.path);
    job.jobs = 3;
    const auto b = sampling::build_patch_dataset(m, job, o2.path);
    REQUIRE(a.rows.size() == 16);
    REQUIRE(b.rows.size() == 16);
    std::map<std::string, eval::Split> split_of;
    for (const auto& r : m.rows) split_of[r.path] = r.split;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].patch_file == b.rows[i].patch_file);
        CHECK(read_all(a.resolve(a.rows[i])) == read_all(b.resolve(b.rows[i])));
        CHECK(a.rows[i].split == split_of.at(a.rows[i].source_image_id));
    }
    CHECK(read_all(o1.path / "index.jsonl") == read_all(o2.path / "index.jsonl"));

    oracle::TempDir o3("pd3");
    job.only_split = eval::Split::test;
    job.transform = [](const img::Image& im, const eval::ManifestRow&) { return img::Image(im.height, im.width, 3, 0.5f); };
    const auto c = sampling::build_patch_dataset(m, job, o3.path);
    CHECK(c.rows.size() == 4);
    for (const auto& r : c.rows) {
        CHECK(r.split == eval::Split::test);
        for (float v : sampling::load_patch(c.resolve(r)).data) CHECK(v == 0.5f);
    }
}

}

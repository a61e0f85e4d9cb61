#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "camfp/common/error.hpp"
#include "camfp/imgcore/jpeg.hpp"
#include "camfp/manip/manip.hpp"
#include "support/oracles.hpp"

using namespace camfp;
using namespace camfp::manip;

namespace {

double interior_mae(const img::Image& a, const img::Image& b, double margin) {
    const auto r0 = std::size_t(a.height * margin), c0 = std::size_t(a.width * margin);
    double s = 0;
    std::size_t n = 0;
    for (std::size_t r = r0; r < a.height - r0; ++r)
        for (std::size_t c = c0; c < a.width - c0; ++c)
            for (std::size_t ch = 0; ch < a.channels; ++ch, ++n) s += std::abs(a.at(r, c, ch) - b.at(r, c, ch));
    return s / double(n);
}

std::vector<float> sorted(std::vector<float> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_SUITE("manip") {

TEST_CASE("gamma examples") {
    const auto img = oracle::random_image(9, 7, 3, 1);
    CHECK(gamma_correct(img, 1.0).data == img.data);
    img::Image q(1, 1, 1);
    q.data = {0.25f};
    CHECK(gamma_correct(q, 0.5).data[0] == 0.5f);
    const auto back = gamma_correct(gamma_correct(img, 0.7), 1 / 0.7);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) < 1e-6);
    CHECK_THROWS_AS(gamma_correct(img, 0.0), ArgumentError);
    CHECK_THROWS_AS(gamma_correct(img, -1.4), ArgumentError);
}

TEST_CASE("gamma is monotone and range preserving") {
    img::Image ramp(1, 256, 1);
    for (std::size_t i = 0; i < 256; ++i) ramp.data[i] = float(i / 255.0);
    for (double g : {0.3, 0.7, 1.4, 3.0}) {
        const auto out = gamma_correct(ramp, g);
        CHECK(out.data.front() == 0.0f);
        CHECK(out.data.back() == 1.0f);
        for (std::size_t i = 1; i < 256; ++i) CHECK(out.data[i] > out.data[i - 1]);
    }
}

TEST_CASE("right-angle rotation is an exact permutation") {
    const auto img = oracle::random_image(12, 12, 3, 2);
    const auto r90 = rotate(img, 90);
    for (std::size_t r = 0; r < 12; ++r)
        for (std::size_t c = 0; c < 12; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) CHECK(r90.at(r, c, ch) == img.at(c, 11 - r, ch));
    for (double a : {90.0, 180.0, 270.0, -90.0}) CHECK(sorted(rotate(img, a).data) == sorted(img.data));
    CHECK(rotate(rotate(rotate(rotate(img, 90), 90), 90), 90).data == img.data);
    CHECK(rotate(img, 270).data == rotate(img, -90).data);
    CHECK(rotate(rotate(img, 180), 180).data == img.data);
}

TEST_CASE("right-angle rotation of a non-square image swaps the sides") {
    const auto img = oracle::random_image(6, 10, 1, 3);
    const auto r = rotate(img, 90);
    CHECK(r.height == 10);
    CHECK(r.width == 6);
    CHECK(rotate(r, 270).data == img.data);
    CHECK(rotate(img, 180).height == 6);
}

TEST_CASE("rotation by a full turn is the identity") {
    const auto img = oracle::random_image(16, 16, 3, 4);
    for (double a : {0.0, 360.0, -360.0, 720.0}) {
        const auto out = rotate(img, a);
        for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(out.data[i] - img.data[i]) < 1e-6);
    }
}

TEST_CASE("interpolated path agrees with the exact right angle") {
    const auto img = oracle::smooth_image(32, 32, 5);
    const auto exact = rotate(img, 90), near = rotate(img, 90 + 1e-7);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(exact.data[i] - near.data[i]) < 1e-4);
}

TEST_CASE("rotate 15 then -15 keeps the interior") {
    const auto img = oracle::smooth_image(128, 128, 6);
    for (double a : {15.0, 30.0}) {
        const auto back = rotate(rotate(img, a), -a);
        CHECK(back.height == 128);
        CHECK(interior_mae(back, img, 0.1) < 0.02);
    }
}

TEST_CASE("rotation keeps the canvas and the value range") {
    const auto img = oracle::random_image(20, 30, 3, 7);
    const auto out = rotate(img, 33);
    CHECK(out.height == 20);
    CHECK(out.width == 30);
    for (float v : out.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK_THROWS_AS(rotate(img, std::nan("")), ArgumentError);
}

TEST_CASE("spec parsing and labels") {
    auto s = ManipSpec::parse("gamma=0.7");
    CHECK(s.op == ManipOp::gamma);
    CHECK(s.param == 0.7);
    CHECK(s.label() == "gamma=0.7");
    s = ManipSpec::parse("rotate=-15");
    CHECK(s.op == ManipOp::rotate);
    CHECK(s.label() == "rotate=-15");
    CHECK(ManipSpec::parse("jpeg=20").label() == "jpeg=20");
    CHECK_THROWS_AS(ManipSpec::parse("jpeg=0"), ArgumentError);
    CHECK_THROWS_AS(ManipSpec::parse("jpeg=50.5"), ArgumentError);
    CHECK_THROWS_AS(ManipSpec::parse("gamma=0"), ArgumentError);
    CHECK_THROWS_AS(ManipSpec::parse("gamma"), ArgumentError);
    CHECK_THROWS_AS(ManipSpec::parse("blur=3"), ArgumentError);
    CHECK_THROWS_AS(ManipSpec::parse("gamma=0.7x"), ArgumentError);
    CHECK(to_string(manip_op_from_string("rotate")) == "rotate");
}

TEST_CASE("apply dispatches to each operation") {
    const auto img = oracle::smooth_image(24, 24, 8);
    CHECK(apply(img, ManipSpec::parse("gamma=1")).data == img.data);
    CHECK(apply(img, ManipSpec::parse("gamma=1.4")).data == gamma_correct(img, 1.4).data);
    CHECK(apply(img, ManipSpec::parse("rotate=90")).data == rotate(img, 90).data);
    CHECK(apply(img, ManipSpec::parse("jpeg=50")).data == img::jpeg_roundtrip(img, img::JpegQuality(50)).data);
    ManipSpec bad;
    bad.op = ManipOp::jpeg;
    bad.param = 101;
    CHECK_THROWS_AS(apply(img, bad), ArgumentError);
}

}  // TEST_SUITE

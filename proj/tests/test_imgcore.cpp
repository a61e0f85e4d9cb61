#include "doctest.h"

#include <cstddef>
#include <cstdio>
#include <fstream>

#include <jpeglib.h>

#include "camfp/common/error.hpp"
#include "camfp/imgcore/image.hpp"
#include "camfp/imgcore/jpeg.hpp"
#include "support/oracles.hpp"

using namespace camfp;
using img::Image;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

std::vector<std::uint8_t> libjpeg_encode(const Image& im, int quality, bool subsample) {
    jpeg_compress_struct cinfo{};
    jpeg_error_mgr jerr{};
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    unsigned char* buf = nullptr;
    unsigned long size = 0;
    jpeg_mem_dest(&cinfo, &buf, &size);
    cinfo.image_width = static_cast<JDIMENSION>(im.width);
    cinfo.image_height = static_cast<JDIMENSION>(im.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    if (!subsample) cinfo.comp_info[0].h_samp_factor = cinfo.comp_info[0].v_samp_factor = 1;
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<unsigned char> row(im.width * 3);
    while (cinfo.next_scanline < cinfo.image_height) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = img::to_byte(im.data[cinfo.next_scanline * im.width * 3 + i]);
        JSAMPROW rp = row.data();
        jpeg_write_scanlines(&cinfo, &rp, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(buf, buf + size);
    std::free(buf);
    jpeg_destroy_compress(&cinfo);
    return out;
}

Image libjpeg_decode(const std::vector<std::uint8_t>& bytes) {
    jpeg_decompress_struct cinfo{};
    jpeg_error_mgr jerr{};
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    cinfo.do_fancy_upsampling = FALSE;
    jpeg_start_decompress(&cinfo);
    Image out(cinfo.output_height, cinfo.output_width, 3);
    std::vector<unsigned char> row(out.width * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        const auto r = cinfo.output_scanline;
        JSAMPROW rp = row.data();
        jpeg_read_scanlines(&cinfo, &rp, 1);
        for (std::size_t i = 0; i < row.size(); ++i) out.data[r * out.width * 3 + i] = row[i] / 255.0f;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, double(std::abs(a.data[i] - b.data[i])));
    return m;
}

double mean_abs_diff(const Image& a, const Image& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / double(a.data.size());
}

}  // namespace

TEST_SUITE("imgcore") {

TEST_CASE("load PPM single red pixel") {
    oracle::TempDir tmp("ppm");
    write_bytes(tmp.path / "a.ppm", std::string("P6\n1 1\n255\n") + char(255) + char(0) + char(0));
    const Image im = img::load_image(tmp.path / "a.ppm");
    CHECK(im.height == 1);
    CHECK(im.width == 1);
    CHECK(im.channels == 3);
    CHECK(im.data == std::vector<float>{1.0f, 0.0f, 0.0f});
}

TEST_CASE("load PPM all zero") {
    oracle::TempDir tmp("ppm0");
    write_bytes(tmp.path / "z.ppm", "P6\n2 2\n255\n" + std::string(12, '\0'));
    const Image im = img::load_image(tmp.path / "z.ppm");
    CHECK(im.data.size() == 12);
    for (float v : im.data) CHECK(v == 0.0f);
}

TEST_CASE("save/load round trip is identity up to 8-bit quantization") {
    oracle::TempDir tmp("rt");
    for (const char* ext : {".png", ".ppm"}) {
        for (std::size_t ch : {1u, 3u}) {
            const Image im = oracle::random_image(16, 16, ch, 11 + ch);
            const auto p = tmp.path / (std::string("x") + std::to_string(ch) + ext);
            img::save_image(im, p);
            const Image back = img::load_image(p);
            REQUIRE(back.channels == ch);
            CHECK(max_abs_diff(im, back) <= 0.5 / 255 + 1e-6);
            img::save_image(back, p);
            CHECK(img::load_image(p).data == back.data);
        }
    }
}

TEST_CASE("save quantizes by round(v*255) and clamps") {
    oracle::TempDir tmp("q");
    Image im(1, 3, 3);
    im.data = {0.5f, 0.5f, 0.5f, 1.7f, 1.0f, 1.0f, -0.2f, 0.0f, 0.0f};
    img::save_image(im, tmp.path / "q.ppm");
    std::ifstream in(tmp.path / "q.ppm", std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), {});
    const std::string px = s.substr(s.size() - 9);
    CHECK((unsigned char)px[0] == 128);
    CHECK((unsigned char)px[3] == 255);
    CHECK((unsigned char)px[6] == 0);
}

TEST_CASE("decode errors name the format") {
    oracle::TempDir tmp("bad");
    write_bytes(tmp.path / "a.gif", "GIF89a....");
    CHECK_THROWS_AS(img::load_image(tmp.path / "a.gif"), DecodeError);
    write_bytes(tmp.path / "b.ppm", "P6\n4 4\n65535\n");
    CHECK_THROWS_WITH_AS(img::load_image(tmp.path / "b.ppm"), doctest::Contains("PPM"), DecodeError);
    write_bytes(tmp.path / "c.png", "\x89PNG\r\n\x1a\n garbage");
    CHECK_THROWS_WITH_AS(img::load_image(tmp.path / "c.png"), doctest::Contains("PNG"), DecodeError);
    CHECK_THROWS_AS(img::load_image(tmp.path / "missing.png"), IoError);
    CHECK_THROWS_AS(img::save_image(Image(2, 2, 3), tmp.path / "nodir" / "x.png"), IoError);
}

TEST_CASE("to_luminance") {
    Image im(1, 2, 3);
    im.data = {1, 1, 1, 1, 0, 0};
    const Image y = img::to_luminance(im);
    CHECK(y.channels == 1);
    CHECK(y.data[0] == doctest::Approx(1.0));
    CHECK(y.data[1] == doctest::Approx(0.299));
    const Image r = oracle::random_image(4, 4, 3, 5);
    const Image ry = img::to_luminance(r);
    for (std::size_t i = 0; i < 16; ++i) {
        const double expect = 0.299 * r.data[3 * i] + 0.587 * r.data[3 * i + 1] + 0.114 * r.data[3 * i + 2];
        CHECK(ry.data[i] == doctest::Approx(expect).epsilon(1e-6));
    }
    CHECK_THROWS_AS(img::to_luminance(Image(2, 2, 1)), ShapeError);
}

TEST_CASE("resize_bilinear examples") {
    Image c(7, 5, 3, 0.3f);
    const Image cr = img::resize_bilinear(c, 3, 11);
    for (float v : cr.data) CHECK(v == doctest::Approx(0.3f));

    Image two(2, 2, 1);
    two.data = {0, 0, 1, 1};
    CHECK(img::resize_bilinear(two, 1, 1).data[0] == doctest::Approx(0.5));

    const Image r = oracle::random_image(9, 6, 3, 2);
    CHECK(max_abs_diff(img::resize_bilinear(r, 9, 6), r) < 1e-6);
    CHECK_THROWS_AS(img::resize_bilinear(r, 0, 4), ArgumentError);
}

TEST_CASE("resize_bilinear stays within input bounds") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Image r = oracle::random_image(13 + s, 17, 1, s);
        const auto [lo, hi] = std::minmax_element(r.data.begin(), r.data.end());
        const Image o = img::resize_bilinear(r, 5 + 3 * s, 29 - s);
        for (float v : o.data) {
            CHECK(v >= *lo - 1e-6);
            CHECK(v <= *hi + 1e-6);
        }
    }
}

TEST_CASE("resize_bilinear reproduces a bilinear ramp") {
    const std::size_t H = 16, W = 12, oh = 7, ow = 5;
    Image ramp(H, W, 1);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) ramp.at(r, c, 0) = float(0.01 * r + 0.02 * c + 0.1);
    const Image o = img::resize_bilinear(ramp, oh, ow);
    for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t c = 0; c < ow; ++c) {
            const double sr = std::clamp((r + 0.5) * double(H) / oh - 0.5, 0.0, double(H - 1));
            const double sc = std::clamp((c + 0.5) * double(W) / ow - 0.5, 0.0, double(W - 1));
            CHECK(o.at(r, c, 0) == doctest::Approx(0.01 * sr + 0.02 * sc + 0.1).epsilon(1e-6));
        }
}

TEST_CASE("jpeg quality scaling") {
    CHECK(img::quality_scale(img::JpegQuality(50)) == 100);
    CHECK(img::scale_quant_table(img::kStdLumaQuant, img::JpegQuality(50)) == img::kStdLumaQuant);
    CHECK(img::scale_quant_table(img::kStdChromaQuant, img::JpegQuality(50)) == img::kStdChromaQuant);
    CHECK(img::kStdLumaQuant[0] == 16);
    CHECK(img::scale_quant_table(img::kStdLumaQuant, img::JpegQuality(90))[0] == 3);
    CHECK(img::quality_scale(img::JpegQuality(20)) == 250);
    CHECK(img::quality_scale(img::JpegQuality(100)) == 0);
    for (auto v : img::scale_quant_table(img::kStdLumaQuant, img::JpegQuality(100))) CHECK(v == 1);
    for (auto v : img::scale_quant_table(img::kStdLumaQuant, img::JpegQuality(1))) CHECK(v <= 255);
    CHECK_THROWS_AS(img::JpegQuality(0), ArgumentError);
    CHECK_THROWS_AS(img::JpegQuality(101), ArgumentError);
}

TEST_CASE("jpeg scaling matches the formula for every quality") {
    for (int q = 1; q <= 100; ++q) {
        const long s = q < 50 ? 5000 / q : 200 - 2 * q;
        const auto t = img::scale_quant_table(img::kStdLumaQuant, img::JpegQuality(q));
        for (int i = 0; i < 64; ++i) {
            const long e = std::clamp((long(img::kStdLumaQuant[i]) * s + 50) / 100, 1L, 255L);
            CHECK(t[i] == e);
        }
    }
}

TEST_CASE("jpeg round trip of constant mid-gray at q90") {
    Image g(24, 40, 3, 0.5f);
    CHECK(max_abs_diff(img::jpeg_roundtrip(g, img::JpegQuality(90)), g) <= 2.0 / 255 + 1e-6);
}

TEST_CASE("jpeg round trip at q100 is within codec round-off") {
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Image im = oracle::smooth_image(48, 64, s);
        CHECK(max_abs_diff(img::jpeg_roundtrip(im, img::JpegQuality(100)), im) <= 6.0 / 255 + 1e-6);
    }
}

TEST_CASE("jpeg error grows as quality falls") {
    const Image im = oracle::smooth_image(64, 64, 9);
    const double e90 = mean_abs_diff(img::jpeg_roundtrip(im, img::JpegQuality(90)), im);
    const double e20 = mean_abs_diff(img::jpeg_roundtrip(im, img::JpegQuality(20)), im);
    CHECK(e20 > e90);
    CHECK_THROWS_AS(img::jpeg_roundtrip(Image(4, 4, 3), img::JpegQuality(50)), ShapeError);
}

TEST_CASE("jpeg streams interoperate with libjpeg") {
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{32, 48}, {37, 29}}) {
        const Image im = oracle::smooth_image(h, w, h * w);
        for (int q : {95, 50, 20}) {
            // Our stream through libjpeg.
            const auto ours = img::encode_jpeg(im, img::JpegQuality(q));
            const Image a = img::decode_jpeg(ours), b = libjpeg_decode(ours);
            REQUIRE(a.height == b.height);
            REQUIRE(a.width == b.width);
            CHECK(max_abs_diff(a, b) <= 3.0 / 255 + 1e-6);
            // libjpeg's stream through our decoder, 4:2:0 and 4:4:4.
            for (bool sub : {true, false}) {
                const auto theirs = libjpeg_encode(im, q, sub);
                const Image c = img::decode_jpeg(theirs), d = libjpeg_decode(theirs);
                REQUIRE(c.width == d.width);
                CHECK(max_abs_diff(c, d) <= 3.0 / 255 + 1e-6);
            }
        }
    }
}

TEST_CASE("jpeg files load through load_image") {
    oracle::TempDir tmp("jpg");
    const Image im = oracle::smooth_image(16, 16, 3);
    img::save_image(im, tmp.path / "a.jpg");
    const Image back = img::load_image(tmp.path / "a.jpg");
    CHECK(back.channels == 3);
    CHECK(mean_abs_diff(back, im) < 0.02);
    std::vector<std::uint8_t> junk{0xFF, 0xD8, 0xFF, 0xC2, 0, 4, 0, 0};
    CHECK_THROWS_AS(img::decode_jpeg(junk), DecodeError);
}

}

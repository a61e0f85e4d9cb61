#include "camfp/imgcore/image.hpp"

#include <algorithm>
#include <cmath>

namespace camfp::img {

Image::Image(std::size_t h, std::size_t w, std::size_t c, float fill)
    : height(h), width(w), channels(c), data(h * w * c, fill) {}

Plane Image::channel_plane(std::size_t ch, double scale) const {
    if (ch >= channels) throw ShapeError("channel index out of range");
    Plane p(height, width);
    for (std::size_t i = 0; i < pixel_count(); ++i) p.data[i] = scale * data[i * channels + ch];
    return p;
}

void clamp_unit(Image& img) {
    for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

std::uint8_t to_byte(float v) {
    const double q = std::round(static_cast<double>(v) * 255.0);
    return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

Image to_luminance(const Image& img) {
    if (img.channels != 3) {
        throw ShapeError("to_luminance: expected 3 channels, got " + std::to_string(img.channels));
    }
    Image out(img.height, img.width, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const float* p = &img.data[i * 3];
        out.data[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
    return out;
}

namespace {

struct Tap {
    std::size_t i0;
    std::size_t i1;
    double t;
};

std::vector<Tap> axis_taps(std::size_t in, std::size_t out) {
    std::vector<Tap> taps(out);
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    const double hi = static_cast<double>(in - 1);
    for (std::size_t d = 0; d < out; ++d) {
        const double s = std::clamp((static_cast<double>(d) + 0.5) * ratio - 0.5, 0.0, hi);
        const auto i0 = static_cast<std::size_t>(std::floor(s));
        taps[d] = {i0, std::min(i0 + 1, in - 1), s - static_cast<double>(i0)};
    }
    return taps;
}

}  // namespace

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0) throw ArgumentError("resize_bilinear: zero-size target");
    if (img.empty()) throw ShapeError("resize_bilinear: empty source image");
    const auto rows = axis_taps(img.height, out_h);
    const auto cols = axis_taps(img.width, out_w);
    const std::size_t C = img.channels;
    Image out(out_h, out_w, C);
    for (std::size_t r = 0; r < out_h; ++r) {
        const Tap& ty = rows[r];
        for (std::size_t c = 0; c < out_w; ++c) {
            const Tap& tx = cols[c];
            for (std::size_t ch = 0; ch < C; ++ch) {
                const double a = img.at(ty.i0, tx.i0, ch), b = img.at(ty.i0, tx.i1, ch);
                const double e = img.at(ty.i1, tx.i0, ch), f = img.at(ty.i1, tx.i1, ch);
                const double top = a + (b - a) * tx.t;
                const double bottom = e + (f - e) * tx.t;
                out.at(r, c, ch) = static_cast<float>(top + (bottom - top) * ty.t);
            }
        }
    }
    return out;
}

}  // namespace camfp::img

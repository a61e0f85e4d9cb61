#include "camfp/manip/manip.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "camfp/common/error.hpp"
#include "camfp/imgcore/jpeg.hpp"

namespace camfp::manip {

img::Image gamma_correct(const img::Image& img, double gamma) {
    if (!(gamma > 0) || !std::isfinite(gamma)) throw ArgumentError("gamma_correct: gamma must be a positive number");
    img::Image out = img;
    for (auto& v : out.data) v = static_cast<float>(std::pow(std::clamp(static_cast<double>(v), 0.0, 1.0), gamma));
    return out;
}

img::Image rotate(const img::Image& img, double degrees) {
    if (!std::isfinite(degrees)) throw ArgumentError("rotate: angle must be finite");
    double a = std::fmod(degrees, 360.0);
    if (a < 0) a += 360.0;
    const std::size_t H = img.height, W = img.width, C = img.channels;
    auto near = [&](double target) { return std::abs(a - target) < 1e-9; };
    if (near(0) || near(360)) return img;
    if (near(90) || near(270)) {
        img::Image out(W, H, C);
        for (std::size_t r = 0; r < W; ++r)
            for (std::size_t c = 0; c < H; ++c)
                for (std::size_t ch = 0; ch < C; ++ch)
                    out.at(r, c, ch) = near(90) ? img.at(c, W - 1 - r, ch) : img.at(H - 1 - c, r, ch);
        return out;
    }
    if (near(180)) {
        img::Image out(H, W, C);
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < W; ++c)
                for (std::size_t ch = 0; ch < C; ++ch) out.at(r, c, ch) = img.at(H - 1 - r, W - 1 - c, ch);
        return out;
    }
    const double th = a * std::numbers::pi / 180.0, cs = std::cos(th), sn = std::sin(th);
    const double yc = (H - 1) / 2.0, xc = (W - 1) / 2.0;
    img::Image out(H, W, C);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            const double dx = c - xc, dy = r - yc;
            const double sx = std::clamp(xc + cs * dx - sn * dy, 0.0, static_cast<double>(W - 1));
            const double sy = std::clamp(yc + sn * dx + cs * dy, 0.0, static_cast<double>(H - 1));
            const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
            const std::size_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
            const double fx = sx - x0, fy = sy - y0;
            for (std::size_t ch = 0; ch < C; ++ch) {
                const double top = img.at(y0, x0, ch) * (1 - fx) + img.at(y0, x1, ch) * fx;
                const double bot = img.at(y1, x0, ch) * (1 - fx) + img.at(y1, x1, ch) * fx;
                out.at(r, c, ch) = static_cast<float>(std::clamp(top * (1 - fy) + bot * fy, 0.0, 1.0));
            }
        }
    return out;
}

std::string to_string(ManipOp op) {
    switch (op) {
        case ManipOp::gamma: return "gamma";
        case ManipOp::rotate: return "rotate";
        case ManipOp::jpeg: return "jpeg";
    }
    return "";
}

ManipOp manip_op_from_string(const std::string& s) {
    if (s == "gamma") return ManipOp::gamma;
    if (s == "rotate") return ManipOp::rotate;
    if (s == "jpeg") return ManipOp::jpeg;
    throw ArgumentError("unknown manipulation '" + s + "' (expected gamma|rotate|jpeg)");
}

void ManipSpec::validate() const {
    switch (op) {
        case ManipOp::gamma:
            if (!(param > 0) || !std::isfinite(param)) throw ArgumentError("gamma must be > 0");
            break;
        case ManipOp::rotate:
            if (!std::isfinite(param)) throw ArgumentError("rotation angle must be finite");
            break;
        case ManipOp::jpeg:
            if (param != std::floor(param) || param < 1 || param > 100)
                throw ArgumentError("jpeg quality must be an integer in [1,100]");
            break;
    }
}

std::string ManipSpec::label() const {
    std::ostringstream os;
    os << to_string(op) << "=" << param;
    return os.str();
}

ManipSpec ManipSpec::parse(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ArgumentError("manipulation spec must look like op=value, got '" + text + "'");
    ManipSpec s;
    s.op = manip_op_from_string(text.substr(0, eq));
    try {
        std::size_t used = 0;
        s.param = std::stod(text.substr(eq + 1), &used);
        if (used != text.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ArgumentError("bad manipulation parameter in '" + text + "'");
    }
    s.validate();
    return s;
}

img::Image apply(const img::Image& img, const ManipSpec& spec) {
    spec.validate();
    switch (spec.op) {
        case ManipOp::gamma: return gamma_correct(img, spec.param);
        case ManipOp::rotate: return rotate(img, spec.param);
        case ManipOp::jpeg: return img::jpeg_roundtrip(img, img::JpegQuality(static_cast<int>(spec.param)));
    }
    return img;
}

}  // namespace camfp::manip

#include "camfp/prnu/prnu.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numeric>
#include <vector>

#include "camfp/common/fft.hpp"
#include "camfp/common/tensor_file.hpp"
#include "json.hpp"

namespace camfp::prnu {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::string to_string(FingerprintKind kind) { return kind == FingerprintKind::flat ? "flat" : "natural"; }

FingerprintKind fingerprint_kind_from_string(const std::string& s) {
    if (s == "natural") return FingerprintKind::natural;
    if (s == "flat") return FingerprintKind::flat;
    throw ArgumentError("unknown fingerprint kind '" + s + "' (expected natural|flat)");
}

void zero_mean(Plane& p) {
    if (p.size() == 0) return;
    const double m = mean_of(p.data);
    for (auto& v : p.data) v -= m;
    for (std::size_t r = 0; r < p.rows; ++r) {
        double s = 0;
        for (std::size_t c = 0; c < p.cols; ++c) s += p(r, c);
        s /= static_cast<double>(p.cols);
        for (std::size_t c = 0; c < p.cols; ++c) p(r, c) -= s;
    }
    std::vector<double> col(p.cols, 0.0);
    for (std::size_t r = 0; r < p.rows; ++r)
        for (std::size_t c = 0; c < p.cols; ++c) col[c] += p(r, c);
    for (auto& v : col) v /= static_cast<double>(p.rows);
    for (std::size_t r = 0; r < p.rows; ++r)
        for (std::size_t c = 0; c < p.cols; ++c) p(r, c) -= col[c];
}

NoiseResidual extract_residual(const img::Image& image, const wavelet::DenoiseParams& params, std::string source_id) {
    params.validate();
    if (image.channels != 1 && image.channels != 3) throw ShapeError("extract_residual: need 1 or 3 channels");
    const std::size_t min_size = std::size_t{1} << params.levels;
    if (image.height < min_size || image.width < min_size) {
        throw ShapeError("extract_residual: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " smaller than 2^levels = " + std::to_string(min_size));
    }
    NoiseResidual out;
    out.source_id = std::move(source_id);
    if (image.channels == 1) {
        out.plane = wavelet::wiener_residual(image.channel_plane(0, 255.0), params);
    } else {
        constexpr double kLuma[3] = {0.299, 0.587, 0.114};
        out.plane = Plane(image.height, image.width);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const Plane r = wavelet::wiener_residual(image.channel_plane(ch, 255.0), params);
            for (std::size_t i = 0; i < r.size(); ++i) out.plane.data[i] += kLuma[ch] * r.data[i];
        }
    }
    zero_mean(out.plane);
    return out;
}

ReferenceFingerprint build_reference(std::span<const NoiseResidual> residuals, std::string device_id,
                                     FingerprintKind kind) {
    if (residuals.empty()) throw ArgumentError("build_reference: no residuals");
    ReferenceFingerprint ref;
    ref.device_id = std::move(device_id);
    ref.kind = kind;
    ref.n_images = residuals.size();
    ref.plane = Plane(residuals[0].plane.rows, residuals[0].plane.cols);
    for (const auto& r : residuals) {
        require_same_shape(ref.plane, r.plane, "build_reference");
        for (std::size_t i = 0; i < r.plane.size(); ++i) ref.plane.data[i] += r.plane.data[i];
    }
    const double inv = 1.0 / static_cast<double>(residuals.size());
    for (auto& v : ref.plane.data) v *= inv;
    zero_mean(ref.plane);
    return ref;
}

double ncc(const Plane& a, const Plane& b) {
    require_same_shape(a, b, "ncc");
    const double ma = mean_of(a.data), mb = mean_of(b.data);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.data[i] - ma, y = b.data[i] - mb;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

Plane cross_correlation(const Plane& a, const Plane& b) {
    require_same_shape(a, b, "cross_correlation");
    if (a.size() == 0) throw ShapeError("cross_correlation: empty input");
    fft::Spectrum fa = fft::forward(a);
    const fft::Spectrum fb = fft::forward(b);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= std::conj(fb[i]);
    return fft::inverse(std::move(fa), a.rows, a.cols);
}

PceReport pce(const Plane& residual, const Plane& reference, std::size_t exclude_radius, double threshold) {
    if (!residual.same_shape(reference)) {
        throw ShapeError("pce: residual " + std::to_string(residual.rows) + "x" + std::to_string(residual.cols) +
                         " and reference " + std::to_string(reference.rows) + "x" + std::to_string(reference.cols) +
                         " differ; resample to the reference size first");
    }
    const Plane rho = cross_correlation(residual, reference);
    const std::size_t R = rho.rows, C = rho.cols;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < rho.size(); ++i)
        if (std::abs(rho.data[i]) > std::abs(rho.data[peak])) peak = i;
    const std::size_t pr = peak / C, pc = peak % C;

    std::vector<char> excluded(rho.size(), 0);
    const long rad = static_cast<long>(exclude_radius);
    for (long dr = -rad; dr <= rad; ++dr)
        for (long dc = -rad; dc <= rad; ++dc) {
            const auto r = static_cast<std::size_t>(((static_cast<long>(pr) + dr) % static_cast<long>(R) + static_cast<long>(R)) % static_cast<long>(R));
            const auto c = static_cast<std::size_t>(((static_cast<long>(pc) + dc) % static_cast<long>(C) + static_cast<long>(C)) % static_cast<long>(C));
            excluded[r * C + c] = 1;
        }
    double energy = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (excluded[i]) continue;
        energy += rho.data[i] * rho.data[i];
        ++count;
    }
    if (count == 0) throw ShapeError("pce: exclusion neighbourhood covers the whole surface");

    PceReport rep;
    rep.peak_row = pr;
    rep.peak_col = pc;
    rep.threshold = threshold;
    const double peak_value = rho.data[peak];
    energy /= static_cast<double>(count);
    rep.pce = energy > 0 ? peak_value * peak_value / energy : 0.0;
    rep.matched = rep.pce >= threshold;
    return rep;
}

PceReport pce(const NoiseResidual& residual, const ReferenceFingerprint& ref, std::size_t exclude_radius,
              double threshold) {
    return pce(residual.plane, ref.plane, exclude_radius, threshold);
}

PceReport pce_pipeline_direct(const img::Image& image, const ReferenceFingerprint& ref, const PipelineParams& params) {
    return pce(extract_residual(image, params.denoise), ref, params.exclude_radius, params.threshold);
}

PceReport pce_pipeline_downsampled(const img::Image& image, const ReferenceFingerprint& ref,
                                   const PipelineParams& params) {
    const img::Image down = img::resize_bilinear(image, params.target, params.target);
    const img::Image up = img::resize_bilinear(down, ref.plane.rows, ref.plane.cols);
    return pce(extract_residual(up, params.denoise), ref, params.exclude_radius, params.threshold);
}

void save_fingerprint(const ReferenceFingerprint& ref, const std::filesystem::path& stem) {
    const std::uint64_t shape[2] = {ref.plane.rows, ref.plane.cols};
    save_tensor(std::filesystem::path(stem).concat(".cftr"), shape, std::span<const double>(ref.plane.data));
    nlohmann::ordered_json j;
    j["device_id"] = ref.device_id;
    j["kind"] = to_string(ref.kind);
    j["n_images"] = ref.n_images;
    j["height"] = ref.plane.rows;
    j["width"] = ref.plane.cols;
    const auto sidecar = std::filesystem::path(stem).concat(".json");
    std::ofstream out(sidecar);
    if (!out) throw IoError("cannot write " + sidecar.string());
    out << j.dump(2) << "\n";
}

ReferenceFingerprint load_fingerprint(const std::filesystem::path& stem) {
    const auto sidecar = std::filesystem::path(stem).concat(".json");
    std::ifstream in(sidecar);
    if (!in) throw IoError("cannot open " + sidecar.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("fingerprint sidecar: " + std::string(e.what()));
    }
    const auto t = load_tensor(std::filesystem::path(stem).concat(".cftr"));
    ReferenceFingerprint ref;
    ref.device_id = j.at("device_id").get<std::string>();
    ref.kind = fingerprint_kind_from_string(j.at("kind").get<std::string>());
    ref.n_images = j.at("n_images").get<std::size_t>();
    const auto h = j.at("height").get<std::size_t>(), w = j.at("width").get<std::size_t>();
    if (t.shape.size() != 2 || t.shape[0] != h || t.shape[1] != w) {
        throw ShapeError("fingerprint: tensor shape does not match sidecar for " + stem.string());
    }
    ref.plane = Plane(h, w);
    ref.plane.data = t.values;
    return ref;
}

}  // namespace camfp::prnu

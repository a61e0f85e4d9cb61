#include "camfp/simcam/simcam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "camfp/common/error.hpp"
#include "camfp/common/fft.hpp"
#include "camfp/common/parallel.hpp"
#include "camfp/common/rng.hpp"
#include "json.hpp"

namespace camfp::sim {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))
constexpr float kSceneLo = 0.05f, kSceneHi = 0.95f;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

img::Image gray_to_rgb(const Plane& p) {
    img::Image out(p.rows, p.cols, 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const float v = std::clamp(static_cast<float>(p.data[i]), kSceneLo, kSceneHi);
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = v;
    }
    return out;
}

Plane render_gradient(const SceneSpec& s, CounterRng& rng) {
    const double phi = rng.uniform(0, 2 * std::numbers::pi);
    const double lo = rng.uniform(0.1, 0.4), hi = rng.uniform(0.6, 0.9);
    const double bow = rng.uniform(-0.1, 0.1);
    Plane p(s.height, s.width);
    for (std::size_t r = 0; r < s.height; ++r) {
        const double y = (r + 0.5) / s.height - 0.5;
        for (std::size_t c = 0; c < s.width; ++c) {
            const double x = (c + 0.5) / s.width - 0.5;
            const double t = 0.5 + std::cos(phi) * x + std::sin(phi) * y;
            p(r, c) = lo + (hi - lo) * std::clamp(t, 0.0, 1.0) + bow * (x * x + y * y);
        }
    }
    return p;
}

// Value noise on a lattice of the given cell size with smoothstep interpolation, in [-1, 1].
void add_value_noise(Plane& p, std::size_t cell, double amp, CounterRng& rng) {
    const std::size_t gh = p.rows / cell + 2, gw = p.cols / cell + 2;
    std::vector<double> lattice(gh * gw);
    for (auto& v : lattice) v = rng.uniform(-1, 1);
    for (std::size_t r = 0; r < p.rows; ++r) {
        const double fy = static_cast<double>(r) / cell;
        const auto iy = static_cast<std::size_t>(fy);
        const double ty = smoothstep(fy - iy);
        for (std::size_t c = 0; c < p.cols; ++c) {
            const double fx = static_cast<double>(c) / cell;
            const auto ix = static_cast<std::size_t>(fx);
            const double tx = smoothstep(fx - ix);
            const double a = lattice[iy * gw + ix], b = lattice[iy * gw + ix + 1];
            const double d = lattice[(iy + 1) * gw + ix], e = lattice[(iy + 1) * gw + ix + 1];
            p(r, c) += amp * ((a * (1 - tx) + b * tx) * (1 - ty) + (d * (1 - tx) + e * tx) * ty);
        }
    }
}

// Multi-octave value noise.
Plane render_texture(const SceneSpec& s, CounterRng& rng) {
    Plane p(s.height, s.width);
    double amp = 1.0, total = 0.0;
    const std::size_t base_cell = std::max<std::size_t>(8, std::min(s.height, s.width) / 7);
    for (std::size_t cell = base_cell; cell >= 4; cell /= 2) {
        add_value_noise(p, cell, amp, rng);
        total += amp;
        amp *= 0.55;
    }
    const double mid = rng.uniform(0.4, 0.6), contrast = rng.uniform(0.5, 0.8);
    for (auto& v : p.data) v = mid + contrast * 0.5 * v / total;
    return p;
}

Plane render_shapes(const SceneSpec& s, CounterRng& rng) {
    Plane p(s.height, s.width, rng.uniform(0.2, 0.8));
    const double scale = static_cast<double>(std::min(s.height, s.width));
    const int n = 8 + static_cast<int>(rng.below(8));
    for (int k = 0; k < n; ++k) {
        const bool circle = rng.below(2) == 0;
        const double cy = rng.uniform(0, s.height), cx = rng.uniform(0, s.width);
        const double a = rng.uniform(0.04, 0.2) * scale, b = rng.uniform(0.04, 0.2) * scale;
        const double level = rng.uniform(0.1, 0.9);
        for (std::size_t r = 0; r < s.height; ++r) {
            const double dy = r + 0.5 - cy;
            for (std::size_t c = 0; c < s.width; ++c) {
                const double dx = c + 0.5 - cx;
                // Signed distance in pixels, negative inside.
                const double sd = circle ? std::hypot(dx, dy) - a : std::max(std::abs(dx) - a, std::abs(dy) - b);
                const double cover = std::clamp(0.5 - sd, 0.0, 1.0);
                if (cover > 0) p(r, c) = (1 - cover) * p(r, c) + cover * level;
            }
        }
    }
    return p;
}

Plane render_flatfield(const SceneSpec& s, CounterRng& rng) {
    const double level = rng.uniform(0.4, 0.7), falloff = rng.uniform(0.01, 0.04);
    const double cy = (s.height - 1) / 2.0, cx = (s.width - 1) / 2.0;
    const double rmax2 = cy * cy + cx * cx;
    Plane p(s.height, s.width);
    for (std::size_t r = 0; r < s.height; ++r)
        for (std::size_t c = 0; c < s.width; ++c) {
            const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
            p(r, c) = level * (1 - falloff * (rmax2 > 0 ? d2 / rmax2 : 0.0));
        }
    return p;
}

void demosaic_lowpass(img::Image& im) {
    static constexpr double k[3][3] = {{1, 2, 1}, {2, 12, 2}, {1, 2, 1}};
    const img::Image src = im;
    const long H = static_cast<long>(im.height), W = static_cast<long>(im.width);
    for (long r = 0; r < H; ++r)
        for (long c = 0; c < W; ++c)
            for (std::size_t ch = 0; ch < im.channels; ++ch) {
                double acc = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        const long rr = std::clamp(r + dr, 0L, H - 1), cc = std::clamp(c + dc, 0L, W - 1);
                        acc += k[dr + 1][dc + 1] * src.at(rr, cc, ch);
                    }
                im.at(r, c, ch) = static_cast<float>(acc / 24.0);
            }
}

nlohmann::ordered_json profile_json(const DeviceProfile& d) {
    nlohmann::ordered_json j;
    j["device_id"] = d.device_id;
    j["model_id"] = d.model_id;
    j["device_index"] = d.device_index;
    j["prnu_strength"] = d.prnu_strength;
    j["noise_sigma"] = d.noise_sigma;
    j["channel_gains"] = d.channel_gains;
    j["response_gamma"] = d.response_gamma;
    j["vignette_strength"] = d.vignette_strength;
    j["vignette_power"] = d.vignette_power;
    j["seed"] = d.seed;
    return j;
}

}  // namespace

void DeviceOptions::validate() const {
    if (height == 0 || width == 0) throw ArgumentError("device resolution must be positive");
    if (noise_sigma < 0) throw ArgumentError("noise_sigma must be >= 0");
    if (prnu_strength < 0) throw ArgumentError("prnu_strength must be >= 0");
    if (prnu_cutoff < 0 || prnu_cutoff >= 0.5) throw ArgumentError("prnu_cutoff must be in [0, 0.5)");
    if (gain_spread < 0 || gain_spread >= 0.5 || gamma_spread < 0 || gamma_spread >= 0.5)
        throw ArgumentError("gain/gamma spreads must be in [0, 0.5)");
    if (vignette_strength < 0 || vignette_spread < 0 || vignette_strength + vignette_spread >= 1)
        throw ArgumentError("vignette strength must stay in [0, 1)");
    if (vignette_power <= 0) throw ArgumentError("vignette power must be positive");
    if (device_offset_scale < 0) throw ArgumentError("device_offset_scale must be >= 0");
}

Plane highpass_pattern(std::size_t rows, std::size_t cols, double cutoff, std::uint64_t key) {
    CounterRng rng(key);
    Plane p(rows, cols);
    for (auto& v : p.data) v = rng.normal();
    if (cutoff > 0) {
        auto spec = fft::forward(p);
        const std::size_t half = cols / 2 + 1;
        for (std::size_t r = 0; r < rows; ++r) {
            const bool low_r = std::abs(fft::bin_frequency(r, rows)) < cutoff;
            for (std::size_t c = 0; c < half; ++c) {
                if (low_r || std::abs(fft::bin_frequency(c, cols)) < cutoff) spec[r * half + c] = 0.0;
            }
        }
        p = fft::inverse(std::move(spec), rows, cols);
    }
    double mean = 0;
    for (double v : p.data) mean += v;
    mean /= static_cast<double>(p.size());
    double var = 0;
    for (auto& v : p.data) {
        v -= mean;
        var += v * v;
    }
    var /= static_cast<double>(p.size());
    if (var <= 0) throw ArgumentError("highpass_pattern: cutoff removes the whole spectrum");
    const double inv = 1.0 / std::sqrt(var);
    for (auto& v : p.data) v *= inv;
    return p;
}

DeviceProfile make_device(const std::string& model_id, std::size_t device_index, std::uint64_t seed,
                          const DeviceOptions& options) {
    options.validate();
    CounterRng model_rng(derive_seed(seed, fnv1a64(model_id)));
    const std::uint64_t device_key = derive_seed(seed, fnv1a64(model_id), device_index);
    CounterRng dev_rng(device_key);
    const double os = options.device_offset_scale;

    DeviceProfile d;
    d.model_id = model_id;
    d.device_index = device_index;
    d.device_id = model_id + "-d" + std::to_string(device_index);
    d.seed = seed;
    d.prnu_strength = options.prnu_strength;
    d.noise_sigma = options.noise_sigma;
    d.vignette_power = options.vignette_power;

    // Gains: a model base within +-spread/3 plus a chromatic device offset of
    // radius 0.8*spread in the plane orthogonal to (1,1,1). Offsets walk the
    // circle by the golden angle so nearby device indices stay well apart.
    const double theta = model_rng.uniform(0, 2 * std::numbers::pi);
    const double phi = theta + kGoldenAngle * static_cast<double>(device_index);
    const double radius = 0.8 * options.gain_spread * os;
    const double e1[3] = {1 / std::numbers::sqrt2, -1 / std::numbers::sqrt2, 0};
    const double e2[3] = {1 / std::sqrt(6.0), 1 / std::sqrt(6.0), -2 / std::sqrt(6.0)};
    for (int c = 0; c < 3; ++c) {
        const double base = 1 + model_rng.uniform(-1, 1) * options.gain_spread / 3;
        d.channel_gains[c] = base + radius * (std::cos(phi) * e1[c] + std::sin(phi) * e2[c]);
    }
    for (int c = 0; c < 3; ++c) {
        const double base = 1 + model_rng.uniform(-1, 1) * options.gamma_spread / 2;
        d.response_gamma[c] = base + dev_rng.uniform(-1, 1) * options.gamma_spread / 2 * os;
    }
    const double v_base = options.vignette_strength + model_rng.uniform(-1, 1) * options.vignette_spread / 2;
    d.vignette_strength = std::max(0.0, v_base + dev_rng.uniform(-1, 1) * options.vignette_spread / 2 * os);

    d.prnu = highpass_pattern(options.height, options.width, options.prnu_cutoff,
                              derive_seed(device_key, fnv1a64("prnu")));
    return d;
}

std::string to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::gradient: return "gradient";
        case SceneKind::texture: return "texture";
        case SceneKind::shapes: return "shapes";
        case SceneKind::flatfield: return "flatfield";
    }
    return "";
}

SceneKind scene_kind_from_string(const std::string& s) {
    if (s == "gradient") return SceneKind::gradient;
    if (s == "texture") return SceneKind::texture;
    if (s == "shapes") return SceneKind::shapes;
    if (s == "flatfield") return SceneKind::flatfield;
    throw ArgumentError("unknown scene kind '" + s + "' (expected gradient|texture|shapes|flatfield)");
}

img::Image render_scene(const SceneSpec& spec) {
    if (spec.height == 0 || spec.width == 0) throw ArgumentError("render_scene: empty resolution");
    CounterRng rng(derive_seed(spec.scene_seed, fnv1a64(to_string(spec.kind))));
    switch (spec.kind) {
        case SceneKind::gradient: return gray_to_rgb(render_gradient(spec, rng));
        case SceneKind::texture: return gray_to_rgb(render_texture(spec, rng));
        case SceneKind::shapes: return gray_to_rgb(render_shapes(spec, rng));
        case SceneKind::flatfield: return gray_to_rgb(render_flatfield(spec, rng));
    }
    throw ArgumentError("render_scene: bad kind");
}

img::Image capture(const img::Image& scene, const DeviceProfile& dev, std::optional<img::JpegQuality> jpeg_q,
                   std::uint64_t noise_seed) {
    if (scene.channels != 3) throw ShapeError("capture: scene must have 3 channels");
    if (scene.height != dev.prnu.rows || scene.width != dev.prnu.cols) {
        throw ShapeError("capture: scene " + std::to_string(scene.height) + "x" + std::to_string(scene.width) +
                         " does not match sensor " + std::to_string(dev.prnu.rows) + "x" +
                         std::to_string(dev.prnu.cols));
    }
    img::Image out(scene.height, scene.width, 3);
    const double cy = (scene.height - 1) / 2.0, cx = (scene.width - 1) / 2.0;
    const double rmax = std::hypot(cy, cx);
    double inv_gamma[3];
    for (int c = 0; c < 3; ++c) inv_gamma[c] = 1.0 / dev.response_gamma[c];
    CounterRng noise(derive_seed(noise_seed, fnv1a64(dev.device_id)));
    for (std::size_t r = 0; r < scene.height; ++r)
        for (std::size_t col = 0; col < scene.width; ++col) {
            const double rad = rmax > 0 ? std::hypot(r - cy, col - cx) / rmax : 0.0;
            const double vig = 1 - dev.vignette_strength * std::pow(rad, dev.vignette_power);
            const double prnu = 1 + dev.prnu_strength * dev.prnu(r, col);
            for (int c = 0; c < 3; ++c) {
                double lin = dev.channel_gains[c] * scene.at(r, col, c) * prnu * vig;
                if (dev.noise_sigma > 0) lin += dev.noise_sigma * noise.normal();
                out.at(r, col, c) = static_cast<float>(std::clamp(std::pow(std::max(lin, 0.0), inv_gamma[c]), 0.0, 1.0));
            }
        }
    demosaic_lowpass(out);
    if (jpeg_q) out = img::jpeg_roundtrip(out, *jpeg_q);
    return out;
}

double gain_distance(const DeviceProfile& a, const DeviceProfile& b) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += std::abs(a.channel_gains[c] - b.channel_gains[c]);
    return s / 3.0;
}

std::vector<DeviceProfile> make_devices(const SimulationConfig& config) {
    std::vector<DeviceProfile> devices;
    for (std::size_t m = 0; m < config.n_models; ++m)
        for (std::size_t d = 0; d < config.devices_per_model; ++d)
            devices.push_back(make_device("m" + std::to_string(m), d, config.seed, config.device));
    return devices;
}

eval::DatasetManifest simulate_dataset(const SimulationConfig& config, const std::filesystem::path& out_dir) {
    if (config.n_models == 0 || config.devices_per_model == 0 || config.images_per_device == 0)
        throw ArgumentError("simulate_dataset: counts must be positive");
    if (config.scene_mix.empty()) throw ArgumentError("simulate_dataset: empty scene mix");
    std::optional<img::JpegQuality> q;
    if (config.jpeg_q) q = img::JpegQuality(*config.jpeg_q);

    const auto devices = make_devices(config);
    if (config.device.device_offset_scale > 0) {
        for (std::size_t a = 0; a < devices.size(); ++a)
            for (std::size_t b = a + 1; b < devices.size(); ++b) {
                if (devices[a].model_id != devices[b].model_id) continue;
                const double g = gain_distance(devices[a], devices[b]);
                if (g <= kMinSameModelGainDistance) {
                    throw DataError("simulate_dataset: devices " + devices[a].device_id + " and " +
                                    devices[b].device_id + " have gain distance " + std::to_string(g) +
                                    " <= " + std::to_string(kMinSameModelGainDistance));
                }
            }
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

    eval::DatasetManifest manifest;
    manifest.root = out_dir;
    struct Job {
        std::size_t device;
        std::size_t index;
    };
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < devices.size(); ++d) {
        std::filesystem::create_directories(out_dir / "images" / devices[d].device_id, ec);
        if (ec) throw IoError("cannot create image directory: " + ec.message());
        for (std::size_t i = 0; i < config.images_per_device; ++i) {
            jobs.push_back({d, i});
            eval::ManifestRow row;
            char name[32];
            std::snprintf(name, sizeof name, "_%03zu.png", i);
            row.path = "images/" + devices[d].device_id + "/" + devices[d].device_id + name;
            row.device_id = devices[d].device_id;
            row.model_id = devices[d].model_id;
            row.scene_kind = to_string(config.scene_mix[i % config.scene_mix.size()]);
            manifest.rows.push_back(std::move(row));
        }
    }

    parallel_for(jobs.size(), config.jobs, [&](std::size_t k) {
        const auto& dev = devices[jobs[k].device];
        SceneSpec spec;
        spec.kind = config.scene_mix[jobs[k].index % config.scene_mix.size()];
        spec.height = config.device.height;
        spec.width = config.device.width;
        spec.scene_seed = derive_seed(config.seed, fnv1a64(dev.device_id), jobs[k].index);
        img::save_image(capture(render_scene(spec), dev, q, spec.scene_seed), out_dir / manifest.rows[k].path);
    });

    manifest = eval::split_manifest(std::move(manifest), config.seed, config.train_fraction);
    eval::save_manifest(manifest, out_dir / "manifest.jsonl");

    nlohmann::ordered_json meta;
    meta["seed"] = config.seed;
    meta["jpeg_q"] = config.jpeg_q ? nlohmann::ordered_json(*config.jpeg_q) : nlohmann::ordered_json(nullptr);
    meta["height"] = config.device.height;
    meta["width"] = config.device.width;
    meta["prnu_cutoff"] = config.device.prnu_cutoff;
    meta["devices"] = nlohmann::ordered_json::array();
    for (const auto& d : devices) meta["devices"].push_back(profile_json(d));
    std::ofstream out(out_dir / "devices.json");
    if (!out) throw IoError("cannot write devices.json in " + out_dir.string());
    out << meta.dump(2) << "\n";
    return manifest;
}

}  // namespace camfp::sim

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "camfp/common/error.hpp"
#include "camfp/common/plane.hpp"

namespace camfp::img {

/// H x W x C raster, row-major and channel-interleaved, values normalized to
/// [0, 1]. Quantization to 8 bits happens only at file boundaries and inside
/// the JPEG codec.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f);

    float& at(std::size_t r, std::size_t c, std::size_t ch) { return data[(r * width + c) * channels + ch]; }
    float at(std::size_t r, std::size_t c, std::size_t ch) const { return data[(r * width + c) * channels + ch]; }

    std::size_t pixel_count() const { return height * width; }
    bool empty() const { return data.empty(); }

    /// Extracts channel `ch` as a double plane, multiplied by `scale`.
    Plane channel_plane(std::size_t ch, double scale = 1.0) const;
};

/// Clamps every value into [0, 1].
void clamp_unit(Image& img);

Image load_image(const std::filesystem::path& path);

/// Writes PNG, PPM/PGM, or baseline JPEG (quality 95) chosen by extension.
void save_image(const Image& img, const std::filesystem::path& path);

/// 8-bit quantization used at every file boundary: round(v * 255) clamped.
std::uint8_t to_byte(float v);

Image to_luminance(const Image& img);

/// Bilinear resampling with half-pixel-centre alignment and edge clamping.
Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w);

}  // namespace camfp::img

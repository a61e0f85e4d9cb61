#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "camfp/imgcore/image.hpp"

namespace camfp::img {

/// JPEG quality factor in percent, 1..100.
class JpegQuality {
public:
    explicit JpegQuality(int q);
    int value() const { return q_; }

private:
    int q_;
};

using QuantTable = std::array<std::uint16_t, 64>;  // row-major (natural) order

/// Standard example tables from Annex K of ITU-T T.81.
extern const QuantTable kStdLumaQuant;
extern const QuantTable kStdChromaQuant;

/// Scale factor of the conventional quality mapping:
/// S = 5000 / q (integer division) for q < 50, else 200 - 2q.
int quality_scale(JpegQuality q);

/// t' = clamp(floor((t * S + 50) / 100), 1, 255) for every entry.
QuantTable scale_quant_table(const QuantTable& base, JpegQuality q);

/// Baseline sequential JPEG (JFIF). Three-channel images are coded as
/// YCbCr 4:2:0; single-channel images as one grayscale component.
std::vector<std::uint8_t> encode_jpeg(const Image& img, JpegQuality q);

/// Decodes baseline (SOF0/SOF1, Huffman, 8-bit) streams with any sampling
/// factors, restart intervals, and non-interleaved scans. Progressive,
/// lossless, arithmetic, and 12-bit streams raise DecodeError.
Image decode_jpeg(std::span<const std::uint8_t> bytes);

/// Encode then decode; what the robustness harness feeds downstream.
Image jpeg_roundtrip(const Image& img, JpegQuality q);

}  // namespace camfp::img

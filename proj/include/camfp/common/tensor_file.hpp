#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace camfp {

/// Portable tensor file ("CFTR"):
///
///   offset 0  magic "CFTR"
///          4  version (1)
///          5  dtype (1 = float32, 2 = float64)
///          6  ndim
///          7  4 reserved zero bytes
///         11  ndim x uint64 little-endian dimensions
///             row-major little-endian values
///
/// Byte layout is independent of host endianness.
enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

struct StoredTensor {
    DType dtype = DType::f32;
    std::vector<std::uint64_t> shape;
    std::vector<double> values;  // widened to double on read

    std::uint64_t element_count() const;
    std::vector<float> as_float() const;
};

void write_tensor(std::ostream& out, std::span<const std::uint64_t> shape, std::span<const float> values);
void write_tensor(std::ostream& out, std::span<const std::uint64_t> shape, std::span<const double> values);
StoredTensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                 std::span<const float> values);
void save_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                 std::span<const double> values);
StoredTensor load_tensor(const std::filesystem::path& path);

}  // namespace camfp

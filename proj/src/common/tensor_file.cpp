#include "camfp/common/tensor_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "camfp/common/error.hpp"

namespace camfp {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'F', 'T', 'R'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kMaxDims = 16;

template <class U>
void put_le(std::ostream& out, U v) {
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream& in) {
    std::array<unsigned char, sizeof(U)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw DecodeError("CFTR: truncated stream");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
    return v;
}

template <class U, class T>
void write_values(std::ostream& out, std::span<const T> values) {
    std::vector<unsigned char> buf(values.size() * sizeof(U));
    for (std::size_t k = 0; k < values.size(); ++k) {
        const auto bits = std::bit_cast<U>(values[k]);
        for (std::size_t i = 0; i < sizeof(U); ++i) buf[k * sizeof(U) + i] = (bits >> (8 * i)) & 0xFF;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

template <class U, class T>
void read_values(std::istream& in, std::vector<double>& values) {
    std::vector<unsigned char> buf(values.size() * sizeof(U));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw DecodeError("CFTR: truncated data");
    for (std::size_t k = 0; k < values.size(); ++k) {
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[k * sizeof(U) + i]) << (8 * i);
        values[k] = std::bit_cast<T>(bits);
    }
}

std::uint64_t product(std::span<const std::uint64_t> shape) {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void write_header(std::ostream& out, DType dtype, std::span<const std::uint64_t> shape, std::size_t count) {
    if (shape.size() > kMaxDims) throw ArgumentError("CFTR: too many dimensions");
    if (product(shape) != count) throw ShapeError("CFTR: shape does not match value count");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint8_t>(out, kVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    put_le<std::uint32_t>(out, 0);
    for (auto d : shape) put_le<std::uint64_t>(out, d);
}

template <class Fn>
void with_output_file(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    fn(out);
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::uint64_t StoredTensor::element_count() const { return product(shape); }

std::vector<float> StoredTensor::as_float() const {
    std::vector<float> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(values[i]);
    return out;
}

void write_tensor(std::ostream& out, std::span<const std::uint64_t> shape, std::span<const float> values) {
    write_header(out, DType::f32, shape, values.size());
    write_values<std::uint32_t>(out, values);
}

void write_tensor(std::ostream& out, std::span<const std::uint64_t> shape, std::span<const double> values) {
    write_header(out, DType::f64, shape, values.size());
    write_values<std::uint64_t>(out, values);
}

StoredTensor read_tensor(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw DecodeError("CFTR: bad magic");
    const auto version = get_le<std::uint8_t>(in);
    if (version != kVersion) throw DecodeError("CFTR: unsupported version " + std::to_string(version));
    const auto dtype = get_le<std::uint8_t>(in);
    if (dtype != 1 && dtype != 2) throw DecodeError("CFTR: unknown dtype " + std::to_string(dtype));
    const auto ndim = get_le<std::uint8_t>(in);
    if (ndim > kMaxDims) throw DecodeError("CFTR: too many dimensions");
    if (get_le<std::uint32_t>(in) != 0) throw DecodeError("CFTR: reserved bytes not zero");

    StoredTensor t;
    t.dtype = static_cast<DType>(dtype);
    t.shape.resize(ndim);
    for (auto& d : t.shape) d = get_le<std::uint64_t>(in);
    const auto n = t.element_count();
    if (n > (1ULL << 34)) throw DecodeError("CFTR: implausible element count");
    t.values.resize(n);
    if (t.dtype == DType::f32) {
        read_values<std::uint32_t, float>(in, t.values);
    } else {
        read_values<std::uint64_t, double>(in, t.values);
    }
    return t;
}

void save_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                 std::span<const float> values) {
    with_output_file(path, [&](std::ostream& out) { write_tensor(out, shape, values); });
}

void save_tensor(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                 std::span<const double> values) {
    with_output_file(path, [&](std::ostream& out) { write_tensor(out, shape, values); });
}

StoredTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    return read_tensor(in);
}

}  // namespace camfp

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "camfp/imgcore/image.hpp"
#include "camfp/imgcore/jpeg.hpp"

namespace camfp::img {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Image from_bytes(std::size_t h, std::size_t w, std::size_t c, const std::uint8_t* src) {
    Image img(h, w, c);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(src[i] / 255.0);
    return img;
}

std::vector<std::uint8_t> to_bytes(const Image& img) {
    std::vector<std::uint8_t> out(img.data.size());
    std::transform(img.data.begin(), img.data.end(), out.begin(), to_byte);
    return out;
}

// ---- Netpbm (P5 / P6, maxval 255)

Image decode_netpbm(const std::vector<std::uint8_t>& b, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto next_int = [&]() -> long {
        while (pos < b.size()) {
            if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else if (std::isspace(b[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        bool any = false;
        while (pos < b.size() && std::isdigit(b[pos])) {
            v = v * 10 + (b[pos++] - '0');
            any = true;
            if (v > 1'000'000) throw DecodeError("PPM: header value too large in " + path.string());
        }
        if (!any) throw DecodeError("PPM: malformed header in " + path.string());
        return v;
    };
    const std::size_t channels = b[1] == '6' ? 3 : 1;
    const long w = next_int(), h = next_int(), maxval = next_int();
    if (maxval != 255) throw DecodeError("PPM: only 8-bit (maxval 255) is supported in " + path.string());
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w * h) * channels;
    if (w <= 0 || h <= 0 || pos + need > b.size()) throw DecodeError("PPM: truncated data in " + path.string());
    return from_bytes(static_cast<std::size_t>(h), static_cast<std::size_t>(w), channels, b.data() + pos);
}

void save_netpbm(const Image& img, const std::filesystem::path& path) {
    const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    const auto px = to_bytes(img);
    bytes.insert(bytes.end(), px.begin(), px.end());
    write_file(path, bytes);
}

// ---- PNG via libpng's simplified API

Image decode_png(const std::vector<std::uint8_t>& b, const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, b.data(), b.size())) {
        throw DecodeError(std::string("PNG: ") + png.message + " in " + path.string());
    }
    // The simplified API would silently rescale 16-bit samples; refuse them instead.
    if (b.size() > 24 && b[24] == 16) {
        png_image_free(&png);
        throw DecodeError("PNG: 16-bit depth is not supported in " + path.string());
    }
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = png.message;
        png_image_free(&png);
        throw DecodeError("PNG: " + msg + " in " + path.string());
    }
    return from_bytes(png.height, png.width, color ? 3 : 1, buf.data());
}

void save_png(const Image& img, const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const auto px = to_bytes(img);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, px.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + png.message + " for " + path.string());
    }
    std::vector<std::uint8_t> bytes(size);
    if (!png_image_write_to_memory(&png, bytes.data(), &size, 0, px.data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + png.message + " for " + path.string());
    }
    bytes.resize(size);
    write_file(path, bytes);
}

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5')) return decode_netpbm(bytes, path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0) return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
        try {
            return decode_jpeg(bytes);
        } catch (const DecodeError& e) {
            throw DecodeError(std::string(e.what()) + " in " + path.string());
        }
    }
    throw DecodeError("unsupported image format (expected PNG, PPM P6/P5, or baseline JPEG): " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
    if (img.channels != 1 && img.channels != 3) throw ShapeError("save_image: need 1 or 3 channels");
    if (path.has_parent_path() && !std::filesystem::is_directory(path.parent_path())) {
        throw IoError("parent directory does not exist: " + path.string());
    }
    const auto ext = lower_extension(path);
    if (ext == ".png") {
        save_png(img, path);
    } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        save_netpbm(img, path);
    } else if (ext == ".jpg" || ext == ".jpeg") {
        write_file(path, encode_jpeg(img, JpegQuality(95)));
    } else {
        throw ArgumentError("save_image: unsupported extension '" + ext + "' for " + path.string());
    }
}

}  // namespace camfp::img

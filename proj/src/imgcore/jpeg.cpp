#include "camfp/imgcore/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace camfp::img {

const QuantTable kStdLumaQuant = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

const QuantTable kStdChromaQuant = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,
};

JpegQuality::JpegQuality(int q) : q_(q) {
    if (q < 1 || q > 100) throw ArgumentError("JPEG quality must be in [1,100], got " + std::to_string(q));
}

int quality_scale(JpegQuality q) {
    const int v = q.value();
    return v < 50 ? 5000 / v : 200 - 2 * v;
}

QuantTable scale_quant_table(const QuantTable& base, JpegQuality q) {
    const long s = quality_scale(q);
    QuantTable out{};
    for (std::size_t i = 0; i < 64; ++i) {
        out[i] = static_cast<std::uint16_t>(std::clamp((base[i] * s + 50L) / 100L, 1L, 255L));
    }
    return out;
}

namespace {

// zigzag position -> natural (row-major) index
constexpr std::array<int, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

struct HuffSpec {
    std::array<std::uint8_t, 16> bits;  // number of codes of length 1..16
    std::vector<std::uint8_t> values;
};

const HuffSpec kDcLuma{{0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
const HuffSpec kDcChroma{{0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
const HuffSpec kAcLuma{
    {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d},
    {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14,
     0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09,
     0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a,
     0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65,
     0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88,
     0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9,
     0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
     0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea,
     0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};
const HuffSpec kAcChroma{
    {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77},
    {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32,
     0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16,
     0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39,
     0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
     0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86,
     0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7,
     0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8,
     0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9,
     0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa}};

// 8-point orthonormal DCT-II basis: basis[u][x] = C(u)/2 * cos((2x+1) u pi / 16).
struct DctBasis {
    double m[8][8];
    DctBasis() {
        for (int u = 0; u < 8; ++u) {
            const double cu = u == 0 ? std::numbers::sqrt2 / 2.0 : 1.0;
            for (int x = 0; x < 8; ++x) m[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
    }
};
const DctBasis kDct;

using Block = std::array<double, 64>;

Block fdct(const Block& in) {
    Block tmp{}, out{};
    for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int x = 0; x < 8; ++x) s += kDct.m[u][x] * in[y * 8 + x];
            tmp[y * 8 + u] = s;
        }
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            double s = 0;
            for (int y = 0; y < 8; ++y) s += kDct.m[v][y] * tmp[y * 8 + u];
            out[v * 8 + u] = s;
        }
    return out;
}

Block idct(const Block& in) {
    Block tmp{}, out{};
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += kDct.m[u][x] * in[v * 8 + u];
            tmp[v * 8 + x] = s;
        }
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += kDct.m[v][y] * tmp[v * 8 + x];
            out[y * 8 + x] = s;
        }
    return out;
}

// ---------------------------------------------------------------- encoder

struct Code {
    std::uint16_t bits = 0;
    std::uint8_t length = 0;
};

// Canonical code assignment (T.81 Annex C).
std::array<Code, 256> build_codes(const HuffSpec& spec) {
    std::array<Code, 256> table{};
    std::uint16_t code = 0;
    std::size_t k = 0;
    for (int len = 1; len <= 16; ++len) {
        for (int i = 0; i < spec.bits[len - 1]; ++i) table[spec.values[k++]] = {code++, static_cast<std::uint8_t>(len)};
        code <<= 1;
    }
    return table;
}

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

    void put(std::uint32_t bits, int length) {
        for (int i = length - 1; i >= 0; --i) {
            acc_ = static_cast<std::uint8_t>((acc_ << 1) | ((bits >> i) & 1U));
            if (++count_ == 8) emit();
        }
    }
    void flush() {
        while (count_ != 0) put(1, 1);
    }

private:
    void emit() {
        out_.push_back(acc_);
        if (acc_ == 0xFF) out_.push_back(0x00);
        acc_ = 0;
        count_ = 0;
    }
    std::vector<std::uint8_t>& out_;
    std::uint8_t acc_ = 0;
    int count_ = 0;
};

int magnitude_category(int v) {
    int a = v < 0 ? -v : v;
    int n = 0;
    while (a) {
        ++n;
        a >>= 1;
    }
    return n;
}

std::uint32_t magnitude_bits(int v, int category) {
    return static_cast<std::uint32_t>(v >= 0 ? v : v + (1 << category) - 1);
}

struct ComponentTables {
    QuantTable quant;
    std::array<Code, 256> dc;
    std::array<Code, 256> ac;
};

void encode_block(BitWriter& w, const Block& spatial, const ComponentTables& t, int& dc_pred) {
    Block shifted;
    for (int i = 0; i < 64; ++i) shifted[i] = spatial[i] - 128.0;
    const Block coef = fdct(shifted);
    std::array<int, 64> zz{};
    for (int k = 0; k < 64; ++k) {
        const int n = kZigzag[k];
        zz[k] = static_cast<int>(std::lround(coef[n] / t.quant[n]));
    }
    const int diff = zz[0] - dc_pred;
    dc_pred = zz[0];
    const int dc_cat = magnitude_category(diff);
    w.put(t.dc[dc_cat].bits, t.dc[dc_cat].length);
    if (dc_cat) w.put(magnitude_bits(diff, dc_cat), dc_cat);

    int run = 0;
    for (int k = 1; k < 64; ++k) {
        if (zz[k] == 0) {
            ++run;
            continue;
        }
        while (run > 15) {
            w.put(t.ac[0xF0].bits, t.ac[0xF0].length);
            run -= 16;
        }
        const int cat = magnitude_category(zz[k]);
        const int sym = (run << 4) | cat;
        w.put(t.ac[sym].bits, t.ac[sym].length);
        w.put(magnitude_bits(zz[k], cat), cat);
        run = 0;
    }
    if (run > 0) w.put(t.ac[0x00].bits, t.ac[0x00].length);
}

void put_u16(std::vector<std::uint8_t>& out, unsigned v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_marker(std::vector<std::uint8_t>& out, std::uint8_t m) {
    out.push_back(0xFF);
    out.push_back(m);
}

void put_dqt(std::vector<std::uint8_t>& out, int id, const QuantTable& q) {
    put_marker(out, 0xDB);
    put_u16(out, 2 + 65);
    out.push_back(static_cast<std::uint8_t>(id));
    for (int k = 0; k < 64; ++k) out.push_back(static_cast<std::uint8_t>(q[kZigzag[k]]));
}

void put_dht(std::vector<std::uint8_t>& out, int cls, int id, const HuffSpec& spec) {
    put_marker(out, 0xC4);
    put_u16(out, static_cast<unsigned>(2 + 1 + 16 + spec.values.size()));
    out.push_back(static_cast<std::uint8_t>((cls << 4) | id));
    for (auto b : spec.bits) out.push_back(b);
    for (auto v : spec.values) out.push_back(v);
}

// Samples a plane with edge replication beyond its bounds.
struct SamplePlane {
    std::size_t rows, cols;
    std::vector<double> v;
    double at(std::size_t r, std::size_t c) const { return v[std::min(r, rows - 1) * cols + std::min(c, cols - 1)]; }
};

Block gather(const SamplePlane& p, std::size_t r0, std::size_t c0) {
    Block b{};
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) b[y * 8 + x] = p.at(r0 + y, c0 + x);
    return b;
}

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& img, JpegQuality q) {
    if (img.channels != 1 && img.channels != 3) throw ShapeError("encode_jpeg: need 1 or 3 channels");
    if (img.height == 0 || img.width == 0 || img.height > 65535 || img.width > 65535) {
        throw ShapeError("encode_jpeg: unsupported dimensions");
    }
    const bool color = img.channels == 3;
    const std::size_t H = img.height, W = img.width;

    SamplePlane y{H, W, std::vector<double>(H * W)};
    SamplePlane cb{0, 0, {}}, cr{0, 0, {}};
    if (color) {
        SamplePlane full_cb{H, W, std::vector<double>(H * W)}, full_cr{H, W, std::vector<double>(H * W)};
        for (std::size_t i = 0; i < H * W; ++i) {
            const double r = to_byte(img.data[i * 3]), g = to_byte(img.data[i * 3 + 1]), b = to_byte(img.data[i * 3 + 2]);
            y.v[i] = 0.299 * r + 0.587 * g + 0.114 * b;
            full_cb.v[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            full_cr.v[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }
        // 4:2:0 by 2x2 box averaging, edge-replicated for odd sizes.
        const std::size_t ch = (H + 1) / 2, cw = (W + 1) / 2;
        cb = {ch, cw, std::vector<double>(ch * cw)};
        cr = {ch, cw, std::vector<double>(ch * cw)};
        for (std::size_t r = 0; r < ch; ++r)
            for (std::size_t c = 0; c < cw; ++c) {
                const std::size_t r0 = 2 * r, c0 = 2 * c;
                cb.v[r * cw + c] = 0.25 * (full_cb.at(r0, c0) + full_cb.at(r0, c0 + 1) + full_cb.at(r0 + 1, c0) +
                                           full_cb.at(r0 + 1, c0 + 1));
                cr.v[r * cw + c] = 0.25 * (full_cr.at(r0, c0) + full_cr.at(r0, c0 + 1) + full_cr.at(r0 + 1, c0) +
                                           full_cr.at(r0 + 1, c0 + 1));
            }
    } else {
        for (std::size_t i = 0; i < H * W; ++i) y.v[i] = to_byte(img.data[i]);
    }

    const ComponentTables luma{scale_quant_table(kStdLumaQuant, q), build_codes(kDcLuma), build_codes(kAcLuma)};
    const ComponentTables chroma{scale_quant_table(kStdChromaQuant, q), build_codes(kDcChroma),
                                 build_codes(kAcChroma)};

    std::vector<std::uint8_t> out;
    out.reserve(H * W / 2 + 1024);
    put_marker(out, 0xD8);
    // JFIF APP0
    put_marker(out, 0xE0);
    put_u16(out, 16);
    for (char c : std::string("JFIF")) out.push_back(static_cast<std::uint8_t>(c));
    out.insert(out.end(), {0x00, 0x01, 0x01, 0x00, 0x00, 0x01, 0x00, 0x01, 0x00, 0x00});

    put_dqt(out, 0, luma.quant);
    if (color) put_dqt(out, 1, chroma.quant);

    put_marker(out, 0xC0);
    const int ncomp = color ? 3 : 1;
    put_u16(out, static_cast<unsigned>(8 + 3 * ncomp));
    out.push_back(8);
    put_u16(out, static_cast<unsigned>(H));
    put_u16(out, static_cast<unsigned>(W));
    out.push_back(static_cast<std::uint8_t>(ncomp));
    if (color) {
        out.insert(out.end(), {1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1});
    } else {
        out.insert(out.end(), {1, 0x11, 0});
    }

    put_dht(out, 0, 0, kDcLuma);
    put_dht(out, 1, 0, kAcLuma);
    if (color) {
        put_dht(out, 0, 1, kDcChroma);
        put_dht(out, 1, 1, kAcChroma);
    }

    put_marker(out, 0xDA);
    put_u16(out, static_cast<unsigned>(6 + 2 * ncomp));
    out.push_back(static_cast<std::uint8_t>(ncomp));
    if (color) {
        out.insert(out.end(), {1, 0x00, 2, 0x11, 3, 0x11});
    } else {
        out.insert(out.end(), {1, 0x00});
    }
    out.insert(out.end(), {0, 63, 0});

    BitWriter w(out);
    int pred_y = 0, pred_cb = 0, pred_cr = 0;
    if (color) {
        for (std::size_t mr = 0; mr < (H + 15) / 16; ++mr)
            for (std::size_t mc = 0; mc < (W + 15) / 16; ++mc) {
                for (std::size_t by = 0; by < 2; ++by)
                    for (std::size_t bx = 0; bx < 2; ++bx)
                        encode_block(w, gather(y, mr * 16 + by * 8, mc * 16 + bx * 8), luma, pred_y);
                encode_block(w, gather(cb, mr * 8, mc * 8), chroma, pred_cb);
                encode_block(w, gather(cr, mr * 8, mc * 8), chroma, pred_cr);
            }
    } else {
        for (std::size_t br = 0; br < (H + 7) / 8; ++br)
            for (std::size_t bc = 0; bc < (W + 7) / 8; ++bc) encode_block(w, gather(y, br * 8, bc * 8), luma, pred_y);
    }
    w.flush();
    put_marker(out, 0xD9);
    return out;
}

// ---------------------------------------------------------------- decoder

namespace {

struct HuffDecoder {
    bool defined = false;
    std::array<int, 17> maxcode{};
    std::array<int, 17> valptr{};
    std::array<int, 17> mincode{};
    std::vector<std::uint8_t> values;

    void build(const std::array<std::uint8_t, 16>& bits, std::vector<std::uint8_t> vals) {
        values = std::move(vals);
        int code = 0, k = 0;
        for (int len = 1; len <= 16; ++len) {
            const int n = bits[len - 1];
            if (n == 0) {
                maxcode[len] = -1;
            } else {
                valptr[len] = k;
                mincode[len] = code;
                code += n;
                k += n;
                maxcode[len] = code - 1;
            }
            code <<= 1;
        }
        defined = true;
    }
};

class Decoder {
public:
    explicit Decoder(std::span<const std::uint8_t> bytes) : d_(bytes) {}

    Image run();

private:
    struct Component {
        int id = 0;
        int h = 1, v = 1;
        int tq = 0;
        int td = 0, ta = 0;
        std::size_t blocks_w = 0, blocks_h = 0;  // padded to full MCUs
        std::vector<std::int16_t> coefs;        // blocks_h * blocks_w * 64, natural order
        int dc_pred = 0;
    };

    std::uint8_t byte() {
        if (pos_ >= d_.size()) throw DecodeError("JPEG: unexpected end of stream");
        return d_[pos_++];
    }
    unsigned u16() {
        const unsigned hi = byte();
        return (hi << 8) | byte();
    }
    void skip_segment() {
        const unsigned len = u16();
        if (len < 2 || pos_ + len - 2 > d_.size()) throw DecodeError("JPEG: bad segment length");
        pos_ += len - 2;
    }

    void read_dqt();
    void read_dht();
    void read_sof(std::uint8_t marker);
    void read_sos();
    void decode_scan(const std::vector<Component*>& comps);
    void decode_block(Component& c, std::size_t brow, std::size_t bcol);

    int read_bit();
    int receive(int n);
    int decode_huff(const HuffDecoder& h);
    void reset_bits() {
        bit_acc_ = 0;
        bit_count_ = 0;
        hit_marker_ = false;
    }
    void expect_restart();

    Image assemble() const;

    std::span<const std::uint8_t> d_;
    std::size_t pos_ = 0;
    std::array<std::array<std::uint16_t, 64>, 4> qt_{};
    std::array<bool, 4> qt_defined_{};
    std::array<HuffDecoder, 4> dc_{}, ac_{};
    std::vector<Component> comps_;
    std::size_t height_ = 0, width_ = 0;
    int hmax_ = 1, vmax_ = 1;
    std::size_t mcus_x_ = 0, mcus_y_ = 0;
    unsigned restart_interval_ = 0;
    bool frame_seen_ = false;
    bool scan_seen_ = false;

    std::uint32_t bit_acc_ = 0;
    int bit_count_ = 0;
    bool hit_marker_ = false;
};

void Decoder::read_dqt() {
    const std::size_t end = pos_ + u16() - 2;
    while (pos_ < end) {
        const int pq_tq = byte();
        const int precision = pq_tq >> 4, id = pq_tq & 15;
        if (id > 3) throw DecodeError("JPEG: bad quantization table id");
        for (int k = 0; k < 64; ++k) qt_[id][kZigzag[k]] = static_cast<std::uint16_t>(precision ? u16() : byte());
        qt_defined_[id] = true;
    }
}

void Decoder::read_dht() {
    const std::size_t end = pos_ + u16() - 2;
    while (pos_ < end) {
        const int tc_th = byte();
        const int cls = tc_th >> 4, id = tc_th & 15;
        if (cls > 1 || id > 3) throw DecodeError("JPEG: bad Huffman table id");
        std::array<std::uint8_t, 16> bits{};
        int total = 0;
        for (auto& b : bits) {
            b = byte();
            total += b;
        }
        if (total > 256) throw DecodeError("JPEG: bad Huffman table");
        std::vector<std::uint8_t> vals(static_cast<std::size_t>(total));
        for (auto& v : vals) v = byte();
        (cls == 0 ? dc_ : ac_)[id].build(bits, std::move(vals));
    }
}

void Decoder::read_sof(std::uint8_t marker) {
    if (marker != 0xC0 && marker != 0xC1) {
        const char* kind = marker == 0xC2 || marker == 0xC6 || marker == 0xCA || marker == 0xCE ? "progressive"
                           : marker == 0xC3 || marker == 0xC7 || marker == 0xCB || marker == 0xCF ? "lossless"
                                                                                                    : "arithmetic";
        throw DecodeError(std::string("JPEG: ") + kind + " coding is not supported (baseline only)");
    }
    if (frame_seen_) throw DecodeError("JPEG: multiple frames");
    u16();
    if (byte() != 8) throw DecodeError("JPEG: only 8-bit precision is supported");
    height_ = u16();
    width_ = u16();
    const int n = byte();
    if (height_ == 0 || width_ == 0) throw DecodeError("JPEG: zero dimensions (DNL not supported)");
    if (n != 1 && n != 3) throw DecodeError("JPEG: unsupported component count " + std::to_string(n));
    comps_.resize(static_cast<std::size_t>(n));
    for (auto& c : comps_) {
        c.id = byte();
        const int hv = byte();
        c.h = hv >> 4;
        c.v = hv & 15;
        c.tq = byte();
        if (c.h < 1 || c.h > 4 || c.v < 1 || c.v > 4 || c.tq > 3) throw DecodeError("JPEG: bad component spec");
        hmax_ = std::max(hmax_, c.h);
        vmax_ = std::max(vmax_, c.v);
    }
    mcus_x_ = (width_ + 8 * hmax_ - 1) / (8 * hmax_);
    mcus_y_ = (height_ + 8 * vmax_ - 1) / (8 * vmax_);
    for (auto& c : comps_) {
        c.blocks_w = mcus_x_ * c.h;
        c.blocks_h = mcus_y_ * c.v;
        c.coefs.assign(c.blocks_w * c.blocks_h * 64, 0);
    }
    frame_seen_ = true;
}

int Decoder::read_bit() {
    if (bit_count_ == 0) {
        std::uint8_t b = 0;
        if (!hit_marker_ && pos_ < d_.size()) {
            b = d_[pos_];
            if (b == 0xFF) {
                const std::uint8_t next = pos_ + 1 < d_.size() ? d_[pos_ + 1] : 0xD9;
                if (next == 0x00) {
                    pos_ += 2;
                } else {
                    hit_marker_ = true;  // leave the marker for the caller; pad with zeros
                    b = 0;
                }
            } else {
                ++pos_;
            }
        }
        bit_acc_ = b;
        bit_count_ = 8;
    }
    --bit_count_;
    return static_cast<int>((bit_acc_ >> bit_count_) & 1U);
}

int Decoder::receive(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | read_bit();
    return v;
}

int Decoder::decode_huff(const HuffDecoder& h) {
    if (!h.defined) throw DecodeError("JPEG: scan references undefined Huffman table");
    int code = read_bit();
    for (int len = 1; len <= 16; ++len) {
        if (h.maxcode[len] >= 0 && code <= h.maxcode[len]) {
            const int idx = h.valptr[len] + code - h.mincode[len];
            if (idx < 0 || idx >= static_cast<int>(h.values.size())) break;
            return h.values[static_cast<std::size_t>(idx)];
        }
        code = (code << 1) | read_bit();
    }
    throw DecodeError("JPEG: corrupt Huffman data");
}

int extend(int v, int t) { return t == 0 ? 0 : (v < (1 << (t - 1)) ? v - (1 << t) + 1 : v); }

void Decoder::decode_block(Component& c, std::size_t brow, std::size_t bcol) {
    std::int16_t* out = &c.coefs[(brow * c.blocks_w + bcol) * 64];
    const int t = decode_huff(dc_[c.td]);
    if (t > 11) throw DecodeError("JPEG: bad DC magnitude");
    c.dc_pred += extend(receive(t), t);
    out[0] = static_cast<std::int16_t>(c.dc_pred);
    for (int k = 1; k < 64;) {
        const int rs = decode_huff(ac_[c.ta]);
        const int r = rs >> 4, s = rs & 15;
        if (s == 0) {
            if (r != 15) break;  // EOB
            k += 16;
            continue;
        }
        k += r;
        if (k > 63) throw DecodeError("JPEG: AC run past end of block");
        out[kZigzag[k]] = static_cast<std::int16_t>(extend(receive(s), s));
        ++k;
    }
}

void Decoder::expect_restart() {
    reset_bits();
    while (pos_ + 1 < d_.size() && !(d_[pos_] == 0xFF && d_[pos_ + 1] >= 0xD0 && d_[pos_ + 1] <= 0xD7)) ++pos_;
    if (pos_ + 1 >= d_.size()) throw DecodeError("JPEG: missing restart marker");
    pos_ += 2;
    for (auto& c : comps_) c.dc_pred = 0;
}

void Decoder::decode_scan(const std::vector<Component*>& comps) {
    reset_bits();
    for (auto* c : comps) c->dc_pred = 0;
    unsigned mcu_count = 0;
    auto maybe_restart = [&] {
        if (restart_interval_ && ++mcu_count % restart_interval_ == 0) expect_restart();
    };
    if (comps.size() == 1) {
        // Non-interleaved: blocks in raster order over the component's own extent.
        Component& c = *comps[0];
        const std::size_t cw = (width_ * c.h + 8 * hmax_ - 1) / (8 * hmax_);
        const std::size_t chh = (height_ * c.v + 8 * vmax_ - 1) / (8 * vmax_);
        for (std::size_t br = 0; br < chh; ++br)
            for (std::size_t bc = 0; bc < cw; ++bc) {
                decode_block(c, br, bc);
                if (!(br == chh - 1 && bc == cw - 1)) maybe_restart();
            }
    } else {
        for (std::size_t my = 0; my < mcus_y_; ++my)
            for (std::size_t mx = 0; mx < mcus_x_; ++mx) {
                for (auto* c : comps)
                    for (int v = 0; v < c->v; ++v)
                        for (int h = 0; h < c->h; ++h) decode_block(*c, my * c->v + v, mx * c->h + h);
                if (!(my == mcus_y_ - 1 && mx == mcus_x_ - 1)) maybe_restart();
            }
    }
    // Resynchronize on the next marker.
    while (pos_ + 1 < d_.size() && !(d_[pos_] == 0xFF && d_[pos_ + 1] != 0x00 && d_[pos_ + 1] != 0xFF)) ++pos_;
}

void Decoder::read_sos() {
    if (!frame_seen_) throw DecodeError("JPEG: scan before frame header");
    u16();
    const int n = byte();
    if (n < 1 || n > 4) throw DecodeError("JPEG: bad scan component count");
    std::vector<Component*> scan;
    for (int i = 0; i < n; ++i) {
        const int id = byte();
        const int tables = byte();
        auto it = std::find_if(comps_.begin(), comps_.end(), [&](const Component& c) { return c.id == id; });
        if (it == comps_.end()) throw DecodeError("JPEG: scan references unknown component");
        it->td = tables >> 4;
        it->ta = tables & 15;
        if (it->td > 3 || it->ta > 3) throw DecodeError("JPEG: bad table selector");
        scan.push_back(&*it);
    }
    const int ss = byte(), se = byte(), ahal = byte();
    if (ss != 0 || se != 63 || ahal != 0) throw DecodeError("JPEG: spectral selection not supported (baseline only)");
    decode_scan(scan);
    scan_seen_ = true;
}

Image Decoder::assemble() const {
    // Per-component sample planes (dequantized IDCT), then nearest upsampling.
    std::vector<SamplePlane> planes;
    for (const auto& c : comps_) {
        if (!qt_defined_[c.tq]) throw DecodeError("JPEG: undefined quantization table");
        const auto& q = qt_[c.tq];
        SamplePlane p{c.blocks_h * 8, c.blocks_w * 8, std::vector<double>(c.blocks_h * 8 * c.blocks_w * 64)};
        for (std::size_t br = 0; br < c.blocks_h; ++br)
            for (std::size_t bc = 0; bc < c.blocks_w; ++bc) {
                const std::int16_t* in = &c.coefs[(br * c.blocks_w + bc) * 64];
                Block b;
                for (int i = 0; i < 64; ++i) b[i] = static_cast<double>(in[i]) * q[i];
                const Block s = idct(b);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) p.v[(br * 8 + y) * p.cols + bc * 8 + x] = s[y * 8 + x] + 128.0;
            }
        planes.push_back(std::move(p));
    }
    auto sample = [&](std::size_t ci, std::size_t r, std::size_t c) {
        const auto& comp = comps_[ci];
        return planes[ci].at(r * comp.v / vmax_, c * comp.h / hmax_);
    };
    auto quant8 = [](double v) { return static_cast<float>(std::clamp(std::round(v), 0.0, 255.0) / 255.0); };

    Image out(height_, width_, comps_.size());
    for (std::size_t r = 0; r < height_; ++r)
        for (std::size_t c = 0; c < width_; ++c) {
            if (comps_.size() == 1) {
                out.at(r, c, 0) = quant8(sample(0, r, c));
                continue;
            }
            const double Y = sample(0, r, c), Cb = sample(1, r, c) - 128.0, Cr = sample(2, r, c) - 128.0;
            out.at(r, c, 0) = quant8(Y + 1.402 * Cr);
            out.at(r, c, 1) = quant8(Y - 0.344136 * Cb - 0.714136 * Cr);
            out.at(r, c, 2) = quant8(Y + 1.772 * Cb);
        }
    return out;
}

Image Decoder::run() {
    if (d_.size() < 4 || d_[0] != 0xFF || d_[1] != 0xD8) throw DecodeError("JPEG: missing SOI marker");
    pos_ = 2;
    while (pos_ < d_.size()) {
        if (byte() != 0xFF) continue;  // tolerate garbage between segments
        std::uint8_t m = byte();
        while (m == 0xFF) m = byte();
        if (m == 0xD9) break;
        if (m >= 0xD0 && m <= 0xD7) continue;
        switch (m) {
            case 0xDB: read_dqt(); break;
            case 0xC4: read_dht(); break;
            case 0xDD:
                u16();
                restart_interval_ = u16();
                break;
            case 0xDA: read_sos(); break;
            case 0xCC: throw DecodeError("JPEG: arithmetic coding is not supported (baseline only)");
            default:
                if (m >= 0xC0 && m <= 0xCF && m != 0xC4 && m != 0xC8) {
                    read_sof(m);
                } else {
                    skip_segment();
                }
        }
    }
    if (!frame_seen_ || !scan_seen_) throw DecodeError("JPEG: no image data");
    return assemble();
}

}  // namespace

Image decode_jpeg(std::span<const std::uint8_t> bytes) { return Decoder(bytes).run(); }

Image jpeg_roundtrip(const Image& img, JpegQuality q) {
    if (img.channels != 3) throw ShapeError("jpeg_roundtrip: expected 3 channels");
    if (img.height < 8 || img.width < 8) throw ShapeError("jpeg_roundtrip: image must be at least 8x8");
    const auto bytes = encode_jpeg(img, q);
    return decode_jpeg(bytes);
}

}  // namespace camfp::img

#pragma once

// Surrogate transform codec for tiled 8-bit enhancement images.
//
// Stands in for an HEVC intra encoder: it keeps the quantization parameter
// and its step law, step = 2^((qp - 4) / 6), so rate and distortion respond
// to qp the same way. qp = 0 selects a lossless mode.
//
// Container ("SDCT", all integers little-endian):
//
//   offset size field
//   0      4    magic "SDCT"
//   4      1    version (1)
//   5      1    mode: 0 = transform, 1 = lossless, 2 = external encoder
//   6      1    qp (0..51)
//   7      1    reserved (0)
//   8      4    width
//   12     4    height
//   16     4    payload byte count P
//   20     P    payload
//
// Transform payload: the image, edge-replicated to multiples of 8, is coded in
// raster block order. Each 8x8 block is level shifted by -128, transformed by
// the orthonormal 2-D DCT-II and quantized with a dead zone,
// q = sign(c) floor(|c| / step + 1/3). In zigzag order a block is written as
//   se(DC - previous block's DC), ue(number of non-zero AC levels),
//   then per non-zero AC level: ue(zero run before it), se(level)
// where ue/se are order-0 Exp-Golomb codes, MSB first, and the final byte is
// zero padded. Decoding multiplies levels by step, inverts the DCT, adds 128,
// rounds and clamps to [0, 255].
//
// Lossless payload: per pixel in raster order, se(pixel - prediction) with the
// left neighbour as prediction, the pixel above at the start of a row, and
// 128 for the first pixel.
//
// External payload: the bytes produced by the external encoder, verbatim.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/io_util.hpp"
#include "mifs/rng.hpp"
#include "mifs/tiling.hpp"

namespace mifs {

enum class CodecMode : std::uint8_t { transform = 0, lossless = 1, external = 2 };

inline constexpr std::uint8_t kCodecVersion = 1;
inline constexpr std::size_t kCodecHeaderSize = 20;
inline constexpr int kMaxQp = 51;

inline void check_qp(int qp) {
    if (qp < 0 || qp > kMaxQp) {
        throw domain_error("qp must lie in [0, 51], got " + std::to_string(qp));
    }
}

inline double quant_step(int qp) { return std::exp2((qp - 4) / 6.0); }

// Commands run through the shell. Placeholders: {input} {output} {width}
// {height} {qp}. Frames are raw 8-bit monochrome, row-major, no header.
struct ExternalCodec {
    std::string encode_cmd;
    std::string decode_cmd;
};

struct BitstreamHeader {
    CodecMode mode = CodecMode::transform;
    int qp = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t payload_size = 0;
};

namespace detail {

class BitWriter {
  public:
    void bit(unsigned b) {
        cur_ = static_cast<std::uint8_t>((cur_ << 1) | (b & 1u));
        if (++fill_ == 8) {
            bytes_.push_back(cur_);
            cur_ = 0;
            fill_ = 0;
        }
    }

    void bits(std::uint64_t v, unsigned n) {
        for (unsigned i = n; i-- > 0;) {
            bit(static_cast<unsigned>((v >> i) & 1u));
        }
    }

    void ue(std::uint64_t v) {
        const std::uint64_t x = v + 1;
        unsigned len = 0;
        while ((x >> len) > 1) {
            ++len;
        }
        bits(0, len);
        bits(x, len + 1);
    }

    void se(std::int64_t v) { ue(v > 0 ? static_cast<std::uint64_t>(2 * v - 1) : static_cast<std::uint64_t>(-2 * v)); }

    std::vector<std::uint8_t> finish() {
        while (fill_ != 0) {
            bit(0);
        }
        return std::move(bytes_);
    }

  private:
    std::vector<std::uint8_t> bytes_;
    std::uint8_t cur_ = 0;
    unsigned fill_ = 0;
};

class BitReader {
  public:
    BitReader(std::span<const std::uint8_t> bytes, std::size_t base_offset) : bytes_(bytes), base_(base_offset) {}

    unsigned bit() {
        if (pos_ >= bytes_.size() * 8) {
            throw format_error("bitstream ended prematurely", base_ + bytes_.size());
        }
        const unsigned b = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return b;
    }

    std::uint64_t ue() {
        const std::size_t start = byte_offset();
        unsigned zeros = 0;
        while (bit() == 0) {
            if (++zeros > 40) {
                throw format_error("malformed Exp-Golomb code", start);
            }
        }
        std::uint64_t v = 1;
        for (unsigned i = 0; i < zeros; ++i) {
            v = (v << 1) | bit();
        }
        return v - 1;
    }

    std::int64_t se() {
        const std::uint64_t k = ue();
        return (k & 1u) ? static_cast<std::int64_t>((k + 1) / 2) : -static_cast<std::int64_t>(k / 2);
    }

    std::size_t byte_offset() const noexcept { return base_ + pos_ / 8; }
    std::size_t bytes_consumed() const noexcept { return (pos_ + 7) / 8; }

  private:
    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

inline const std::array<double, 64>& dct_basis() {
    static const std::array<double, 64> basis = [] {
        std::array<double, 64> b{};
        for (int k = 0; k < 8; ++k) {
            const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) {
                b[k * 8 + n] = a * std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
            }
        }
        return b;
    }();
    return basis;
}

inline constexpr std::array<std::uint8_t, 64> kZigzag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

inline void forward_dct(const std::array<double, 64>& in, std::array<double, 64>& out) {
    const auto& b = dct_basis();
    std::array<double, 64> tmp{};
    for (int y = 0; y < 8; ++y) {
        for (int k = 0; k < 8; ++k) {
            double s = 0.0;
            for (int x = 0; x < 8; ++x) {
                s += b[k * 8 + x] * in[y * 8 + x];
            }
            tmp[y * 8 + k] = s;
        }
    }
    for (int k = 0; k < 8; ++k) {
        for (int u = 0; u < 8; ++u) {
            double s = 0.0;
            for (int y = 0; y < 8; ++y) {
                s += b[k * 8 + y] * tmp[y * 8 + u];
            }
            out[k * 8 + u] = s;
        }
    }
}

inline void inverse_dct(const std::array<double, 64>& in, std::array<double, 64>& out) {
    const auto& b = dct_basis();
    std::array<double, 64> tmp{};
    for (int k = 0; k < 8; ++k) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int u = 0; u < 8; ++u) {
                s += b[u * 8 + x] * in[k * 8 + u];
            }
            tmp[k * 8 + x] = s;
        }
    }
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) {
                s += b[k * 8 + y] * tmp[k * 8 + x];
            }
            out[y * 8 + x] = s;
        }
    }
}

inline std::vector<std::uint8_t> wrap(CodecMode mode, int qp, std::size_t width, std::size_t height,
                                      std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> out{'S', 'D', 'C', 'T'};
    out.reserve(kCodecHeaderSize + payload.size());
    put_u8(out, kCodecVersion);
    put_u8(out, static_cast<std::uint8_t>(mode));
    put_u8(out, static_cast<std::uint8_t>(qp));
    put_u8(out, 0);
    put_u32(out, static_cast<std::uint32_t>(width));
    put_u32(out, static_cast<std::uint32_t>(height));
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    put_bytes(out, payload);
    return out;
}

inline std::vector<std::uint8_t> encode_transform(const Image<std::uint8_t>& img, int qp) {
    const double step = quant_step(qp);
    const std::size_t bw = (img.width + 7) / 8, bh = (img.height + 7) / 8;
    BitWriter w;
    std::int64_t prev_dc = 0;
    std::array<double, 64> block{}, coef{};
    for (std::size_t by = 0; by < bh; ++by) {
        for (std::size_t bx = 0; bx < bw; ++bx) {
            for (std::size_t y = 0; y < 8; ++y) {
                const std::size_t sy = std::min(by * 8 + y, img.height - 1);
                for (std::size_t x = 0; x < 8; ++x) {
                    const std::size_t sx = std::min(bx * 8 + x, img.width - 1);
                    block[y * 8 + x] = static_cast<double>(img.at(sy, sx)) - 128.0;
                }
            }
            forward_dct(block, coef);
            std::array<std::int64_t, 64> levels{};
            for (int i = 0; i < 64; ++i) {
                const double c = coef[kZigzag[i]];
                const double mag = std::floor(std::abs(c) / step + 1.0 / 3.0);
                levels[i] = static_cast<std::int64_t>(c < 0 ? -mag : mag);
            }
            w.se(levels[0] - prev_dc);
            prev_dc = levels[0];
            std::uint64_t nonzero = 0;
            for (int i = 1; i < 64; ++i) {
                nonzero += levels[i] != 0;
            }
            w.ue(nonzero);
            std::uint64_t run = 0;
            for (int i = 1; i < 64; ++i) {
                if (levels[i] == 0) {
                    ++run;
                    continue;
                }
                w.ue(run);
                w.se(levels[i]);
                run = 0;
            }
        }
    }
    return w.finish();
}

inline Image<std::uint8_t> decode_transform(std::span<const std::uint8_t> payload, const BitstreamHeader& h) {
    const double step = quant_step(h.qp);
    const std::size_t bw = (h.width + 7) / 8, bh = (h.height + 7) / 8;
    Image<std::uint8_t> img{h.height, h.width, std::vector<std::uint8_t>(h.width * h.height)};
    BitReader r(payload, kCodecHeaderSize);
    std::int64_t prev_dc = 0;
    std::array<double, 64> coef{}, block{};
    for (std::size_t by = 0; by < bh; ++by) {
        for (std::size_t bx = 0; bx < bw; ++bx) {
            coef.fill(0.0);
            prev_dc += r.se();
            coef[kZigzag[0]] = static_cast<double>(prev_dc) * step;
            const std::size_t at = r.byte_offset();
            const std::uint64_t nonzero = r.ue();
            if (nonzero > 63) {
                throw format_error("block declares " + std::to_string(nonzero) + " AC levels", at);
            }
            std::uint64_t pos = 1;
            for (std::uint64_t n = 0; n < nonzero; ++n) {
                const std::size_t run_at = r.byte_offset();
                pos += r.ue();
                if (pos > 63) {
                    throw format_error("zero run leaves the 8x8 block", run_at);
                }
                const std::int64_t level = r.se();
                if (level == 0) {
                    throw format_error("explicit zero level", r.byte_offset());
                }
                coef[kZigzag[pos]] = static_cast<double>(level) * step;
                ++pos;
            }
            inverse_dct(coef, block);
            for (std::size_t y = 0; y < 8; ++y) {
                for (std::size_t x = 0; x < 8; ++x) {
                    const std::size_t iy = by * 8 + y, ix = bx * 8 + x;
                    if (iy < h.height && ix < h.width) {
                        img.at(iy, ix) = static_cast<std::uint8_t>(std::clamp(std::round(block[y * 8 + x] + 128.0), 0.0, 255.0));
                    }
                }
            }
        }
    }
    if (r.bytes_consumed() != payload.size()) {
        throw format_error("unused bytes after the last block", kCodecHeaderSize + r.bytes_consumed());
    }
    return img;
}

inline int lossless_prediction(const Image<std::uint8_t>& img, std::size_t y, std::size_t x) {
    if (x > 0) {
        return img.at(y, x - 1);
    }
    if (y > 0) {
        return img.at(y - 1, 0);
    }
    return 128;
}

inline std::vector<std::uint8_t> encode_lossless(const Image<std::uint8_t>& img) {
    BitWriter w;
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            w.se(static_cast<int>(img.at(y, x)) - lossless_prediction(img, y, x));
        }
    }
    return w.finish();
}

inline Image<std::uint8_t> decode_lossless(std::span<const std::uint8_t> payload, const BitstreamHeader& h) {
    Image<std::uint8_t> img{h.height, h.width, std::vector<std::uint8_t>(h.width * h.height)};
    BitReader r(payload, kCodecHeaderSize);
    for (std::size_t y = 0; y < h.height; ++y) {
        for (std::size_t x = 0; x < h.width; ++x) {
            const std::size_t at = r.byte_offset();
            const std::int64_t v = lossless_prediction(img, y, x) + r.se();
            if (v < 0 || v > 255) {
                throw format_error("lossless residual decodes outside [0, 255]", at);
            }
            img.at(y, x) = static_cast<std::uint8_t>(v);
        }
    }
    if (r.bytes_consumed() != payload.size()) {
        throw format_error("unused bytes after the last pixel", kCodecHeaderSize + r.bytes_consumed());
    }
    return img;
}

inline std::string substitute(std::string cmd, const std::string& key, const std::string& value) {
    for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
        cmd.replace(pos, key.size(), value);
    }
    return cmd;
}

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

inline void run_codec_command(const std::string& tmpl, const fs::path& in, const fs::path& out, std::size_t width,
                              std::size_t height, int qp) {
    std::string cmd = substitute(tmpl, "{input}", shell_quote(in.string()));
    cmd = substitute(cmd, "{output}", shell_quote(out.string()));
    cmd = substitute(cmd, "{width}", std::to_string(width));
    cmd = substitute(cmd, "{height}", std::to_string(height));
    cmd = substitute(cmd, "{qp}", std::to_string(qp));
    if (const int rc = std::system(cmd.c_str()); rc != 0) {
        throw io_error("external codec command failed (status " + std::to_string(rc) + "): " + cmd);
    }
}

class ScratchDir {
  public:
    ScratchDir() {
        const auto base = fs::temp_directory_path();
        for (std::uint64_t attempt = 0;; ++attempt) {
            path_ = base / ("mifs-codec-" + std::to_string(splitmix64(reinterpret_cast<std::uintptr_t>(this) ^
                                                                      static_cast<std::uint64_t>(std::rand()) ^
                                                                      attempt)));
            std::error_code ec;
            if (fs::create_directory(path_, ec)) {
                break;
            }
            if (attempt > 100) {
                throw io_error("cannot create a scratch directory under " + base.string());
            }
        }
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const noexcept { return path_; }

  private:
    fs::path path_;
};

} // namespace detail

inline BitstreamHeader parse_bitstream_header(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes, "enhancement bitstream");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SDCT", 4) != 0) {
        throw format_error("bad magic, expected \"SDCT\"", 0);
    }
    in.bytes(4);
    if (const auto v = in.u8(); v != kCodecVersion) {
        throw format_error("unsupported bitstream version " + std::to_string(v), 4);
    }
    BitstreamHeader h;
    const auto mode = in.u8();
    if (mode > 2) {
        throw format_error("unknown codec mode " + std::to_string(mode), 5);
    }
    h.mode = static_cast<CodecMode>(mode);
    h.qp = in.u8();
    if (h.qp > kMaxQp) {
        throw format_error("qp " + std::to_string(h.qp) + " out of range", 6);
    }
    in.u8();
    h.width = in.u32();
    h.height = in.u32();
    h.payload_size = in.u32();
    if (h.width == 0 || h.height == 0) {
        throw format_error("zero image dimension", 8);
    }
    if (in.remaining() != h.payload_size) {
        throw format_error("payload holds " + std::to_string(in.remaining()) + " bytes, header declares " +
                               std::to_string(h.payload_size),
                           in.remaining() < h.payload_size ? bytes.size() : kCodecHeaderSize + h.payload_size);
    }
    return h;
}

inline std::vector<std::uint8_t> encode_enhancement(const Image<std::uint8_t>& img, int qp) {
    check_qp(qp);
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height) {
        throw domain_error("cannot encode an empty or inconsistent image");
    }
    if (qp == 0) {
        return detail::wrap(CodecMode::lossless, qp, img.width, img.height, detail::encode_lossless(img));
    }
    return detail::wrap(CodecMode::transform, qp, img.width, img.height, detail::encode_transform(img, qp));
}

inline std::vector<std::uint8_t> encode_enhancement_external(const Image<std::uint8_t>& img, int qp,
                                                             const ExternalCodec& codec) {
    check_qp(qp);
    if (codec.encode_cmd.empty()) {
        throw domain_error("external codec has no encode command");
    }
    detail::ScratchDir dir;
    const auto in = dir.path() / "input.yuv", out = dir.path() / "output.bin";
    atomic_write(in, std::span<const std::uint8_t>(img.pixels));
    detail::run_codec_command(codec.encode_cmd, in, out, img.width, img.height, qp);
    const auto payload = read_file(out);
    return detail::wrap(CodecMode::external, qp, img.width, img.height, payload);
}

inline Image<std::uint8_t> decode_enhancement(std::span<const std::uint8_t> bytes,
                                              const ExternalCodec* codec = nullptr) {
    const auto h = parse_bitstream_header(bytes);
    const auto payload = bytes.subspan(kCodecHeaderSize);
    switch (h.mode) {
    case CodecMode::transform: return detail::decode_transform(payload, h);
    case CodecMode::lossless: return detail::decode_lossless(payload, h);
    case CodecMode::external: break;
    }
    if (codec == nullptr || codec->decode_cmd.empty()) {
        throw domain_error("bitstream was produced by an external encoder; a decode command is required");
    }
    detail::ScratchDir dir;
    const auto in = dir.path() / "input.bin", out = dir.path() / "output.yuv";
    atomic_write(in, payload);
    detail::run_codec_command(codec->decode_cmd, in, out, h.width, h.height, h.qp);
    auto pixels = read_file(out);
    if (pixels.size() != h.width * h.height) {
        throw io_error("external decoder produced " + std::to_string(pixels.size()) + " bytes, expected " +
                       std::to_string(h.width * h.height));
    }
    return {h.height, h.width, std::move(pixels)};
}

} // namespace mifs

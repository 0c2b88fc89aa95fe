#pragma once

// FTEN container.
//
//   offset  size  field
//   0       4     magic "FTEN"
//   4       1     version (1)
//   5       1     dtype: 1 = float32, 2 = uint8
//   6       1     dimension count d (1..4)
//   7       4*d   dimensions, uint32 little-endian, outermost first
//   7+4d    ...   payload, little-endian, row-major
//
// Tensors are written with d = 3 (C, H, W). On read, d = 1 and d = 2 are
// promoted to a single channel and d = 4 requires a leading dimension of 1.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/io_util.hpp"
#include "mifs/tensor.hpp"

namespace mifs {

enum class DType : std::uint8_t { float32 = 1, uint8 = 2 };

inline constexpr std::uint8_t kFtenVersion = 1;

inline std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype = DType::float32) {
    t.validate();
    std::vector<std::uint8_t> out{'F', 'T', 'E', 'N'};
    const std::size_t elem = dtype == DType::float32 ? 4 : 1;
    out.reserve(7 + 12 + t.size() * elem);
    put_u8(out, kFtenVersion);
    put_u8(out, static_cast<std::uint8_t>(dtype));
    put_u8(out, 3);
    put_u32(out, static_cast<std::uint32_t>(t.channels));
    put_u32(out, static_cast<std::uint32_t>(t.height));
    put_u32(out, static_cast<std::uint32_t>(t.width));
    if (dtype == DType::float32) {
        for (float v : t.values) {
            put_f32(out, v);
        }
    } else {
        for (float v : t.values) {
            if (!(v >= 0.0f && v <= 255.0f) || v != std::floor(v)) {
                throw domain_error("uint8 payload requires integer values in [0, 255]");
            }
            put_u8(out, static_cast<std::uint8_t>(v));
        }
    }
    return out;
}

inline Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes, "FTEN tensor");
    auto magic = in.bytes(4);
    if (std::memcmp(magic.data(), "FTEN", 4) != 0) {
        throw format_error("bad magic, expected \"FTEN\"", 0);
    }
    if (const auto version = in.u8(); version != kFtenVersion) {
        throw format_error("unsupported FTEN version " + std::to_string(version), 4);
    }
    const std::uint8_t dtype = in.u8();
    if (dtype != 1 && dtype != 2) {
        throw format_error("unknown dtype code " + std::to_string(dtype), 5);
    }
    const std::uint8_t ndim = in.u8();
    if (ndim < 1 || ndim > 4) {
        throw format_error("dimension count " + std::to_string(ndim) + " outside 1..4", 6);
    }
    std::vector<std::uint32_t> dims(ndim);
    for (auto& d : dims) {
        const std::size_t at = in.offset();
        d = in.u32();
        if (d == 0) {
            throw format_error("zero-size dimension", at);
        }
    }
    std::size_t c = 1, h = 1, w = 1;
    switch (ndim) {
    case 1: w = dims[0]; break;
    case 2: h = dims[0]; w = dims[1]; break;
    case 3: c = dims[0]; h = dims[1]; w = dims[2]; break;
    default:
        if (dims[0] != 1) {
            throw format_error("4-d tensors must have a leading dimension of 1", 7);
        }
        c = dims[1]; h = dims[2]; w = dims[3];
    }
    Tensor t(c, h, w);
    const std::size_t header = in.offset();
    const std::size_t elem = dtype == 1 ? 4 : 1;
    if (in.remaining() < t.size() * elem) {
        throw format_error("truncated payload: declared " + std::to_string(t.size()) + " values, found " +
                               std::to_string(in.remaining() / elem),
                           bytes.size());
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (dtype == 1) {
            const float v = in.f32();
            if (!std::isfinite(v)) {
                throw format_error("non-finite payload value", header + i * 4);
            }
            t.values[i] = v;
        } else {
            t.values[i] = static_cast<float>(in.u8());
        }
    }
    if (in.remaining() != 0) {
        throw format_error("trailing bytes after payload", in.offset());
    }
    return t;
}

inline void write_tensor(const Tensor& t, const fs::path& path, DType dtype = DType::float32) {
    atomic_write(path, encode_tensor(t, dtype));
}

inline Tensor read_tensor(const fs::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_tensor(bytes);
    } catch (const format_error& e) {
        throw e.with_context(path.string());
    }
}

} // namespace mifs

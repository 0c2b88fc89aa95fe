#pragma once

// Hard and soft feature selection.
//
// Hard selection keeps the first C' channels of an importance ordering; the
// reconstruction handed to downstream heads has all C channels with the
// dropped ones zero-filled.
//
// Soft selection keeps the same C' channels as 8-bit "base" channels and
// sends the remaining "enhancement" channels, 8-bit quantized per channel,
// tiled in ordering order, through the enhancement codec at a given qp.
//
// Payload container ("FSSP", little-endian):
//   magic "FSSP", version u8 (1), 3 reserved bytes,
//   C, H, W, C' (u32), qp (i32),
//   original channel ids (C x i32), base ids (C' x i32), enhancement ids (i32 each),
//   base (min, max) pairs (f32), base codes (C' * H * W bytes),
//   enhancement (min, max) pairs (f32), tile rows, tile cols (u32),
//   enhancement bitstream length (u32) and bytes (an "SDCT" stream, empty when C' = C).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "mifs/codec.hpp"
#include "mifs/error.hpp"
#include "mifs/io_util.hpp"
#include "mifs/quantize.hpp"
#include "mifs/tensor.hpp"
#include "mifs/tiling.hpp"

namespace mifs {

enum class SelectionMode { hard, soft };
enum class CodecKind { surrogate, external };

struct SelectionPlan {
    std::vector<int> ordering; // channel ids, most important first
    SelectionMode mode = SelectionMode::hard;
    std::size_t keep_count = 0; // C'
    int qp = 30;
    CodecKind codec = CodecKind::surrogate;
    ExternalCodec external;

    // round(fraction * channels); fraction must lie in (0, 1].
    static std::size_t keep_count_for(double fraction, std::size_t channels) {
        if (!(fraction > 0.0 && fraction <= 1.0)) {
            throw domain_error("keep fraction must lie in (0, 1], got " + format_double(fraction));
        }
        const auto kept = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(channels)));
        if (kept < 1) {
            throw domain_error("keep fraction " + format_double(fraction) + " retains no channel of " +
                               std::to_string(channels));
        }
        return kept;
    }

    void validate(const Tensor& t) const {
        if (keep_count < 1 || keep_count > t.channels) {
            throw domain_error("keep count " + std::to_string(keep_count) + " outside [1, " +
                               std::to_string(t.channels) + "]");
        }
        check_qp(qp);
        auto a = ordering, b = t.channel_ids;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            throw domain_error("selection ordering is not a permutation of the tensor's channel ids");
        }
    }
};

struct HardSelection {
    Tensor selected;       // C' channels in ordering order
    Tensor reconstruction; // C channels, dropped ones zero
};

namespace detail {
inline Tensor gather_channels(const Tensor& t, std::span<const int> ids) {
    Tensor out(ids.size(), t.height, t.width);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto src = t.channel(t.index_of(ids[i]));
        std::copy(src.begin(), src.end(), out.channel(i).begin());
        out.channel_ids[i] = ids[i];
    }
    return out;
}

inline void scatter_channels(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < src.channels; ++i) {
        const auto s = src.channel(i);
        std::copy(s.begin(), s.end(), dst.channel(dst.index_of(src.channel_ids[i])).begin());
    }
}
} // namespace detail

inline HardSelection hard_select(const Tensor& t, const SelectionPlan& plan) {
    t.validate();
    plan.validate(t);
    HardSelection out;
    out.selected = detail::gather_channels(t, std::span(plan.ordering).first(plan.keep_count));
    out.reconstruction = Tensor(t.channels, t.height, t.width);
    out.reconstruction.channel_ids = t.channel_ids;
    detail::scatter_channels(out.reconstruction, out.selected);
    return out;
}

struct CompressedPayload {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    int qp = 0;
    std::vector<int> channel_ids; // original channel order
    QuantizedTensor base;         // C' channels, ordering order
    std::vector<int> enhancement_ids;
    std::vector<float> enhancement_mins;
    std::vector<float> enhancement_maxs;
    TileDescriptor tiling;
    std::vector<std::uint8_t> enhancement_bitstream;

    std::size_t base_bytes() const noexcept { return base.codes.size() + 8 * base.channels; }
    std::size_t enhancement_bytes() const noexcept {
        return enhancement_bitstream.size() + 8 * enhancement_ids.size();
    }
};

inline CompressedPayload soft_select(const Tensor& t, const SelectionPlan& plan) {
    t.validate();
    plan.validate(t);
    CompressedPayload p;
    p.channels = t.channels;
    p.height = t.height;
    p.width = t.width;
    p.qp = plan.qp;
    p.channel_ids = t.channel_ids;
    const std::span<const int> order(plan.ordering);
    p.base = quantize8(detail::gather_channels(t, order.first(plan.keep_count)));
    const auto rest = order.subspan(plan.keep_count);
    p.enhancement_ids.assign(rest.begin(), rest.end());
    p.tiling = tile_grid(rest.size(), t.height, t.width);
    if (rest.empty()) {
        return p;
    }
    const auto enh = quantize8(detail::gather_channels(t, rest));
    p.enhancement_mins = enh.mins;
    p.enhancement_maxs = enh.maxs;
    const auto image = tile(std::span<const std::uint8_t>(enh.codes), p.tiling);
    p.enhancement_bitstream = plan.codec == CodecKind::external
                                  ? encode_enhancement_external(image, plan.qp, plan.external)
                                  : encode_enhancement(image, plan.qp);
    return p;
}

struct ReconstructOptions {
    // Replace the enhancement channels by zeros instead of decoding them.
    bool drop_enhancement = false;
    const ExternalCodec* external = nullptr;
};

inline Tensor reconstruct(const CompressedPayload& p, const ReconstructOptions& opt = {}) {
    Tensor out(p.channels, p.height, p.width);
    out.channel_ids = p.channel_ids;
    detail::scatter_channels(out, dequantize8(p.base));
    if (p.enhancement_ids.empty() || opt.drop_enhancement) {
        return out;
    }
    const auto image = decode_enhancement(p.enhancement_bitstream, opt.external);
    QuantizedTensor enh;
    enh.channels = p.enhancement_ids.size();
    enh.height = p.height;
    enh.width = p.width;
    enh.codes = untile(image, p.tiling);
    enh.mins = p.enhancement_mins;
    enh.maxs = p.enhancement_maxs;
    enh.channel_ids = p.enhancement_ids;
    detail::scatter_channels(out, dequantize8(enh));
    return out;
}

inline std::vector<std::uint8_t> serialize_payload(const CompressedPayload& p) {
    std::vector<std::uint8_t> out{'F', 'S', 'S', 'P', 1, 0, 0, 0};
    put_u32(out, static_cast<std::uint32_t>(p.channels));
    put_u32(out, static_cast<std::uint32_t>(p.height));
    put_u32(out, static_cast<std::uint32_t>(p.width));
    put_u32(out, static_cast<std::uint32_t>(p.base.channels));
    put_i32(out, p.qp);
    for (int id : p.channel_ids) put_i32(out, id);
    for (int id : p.base.channel_ids) put_i32(out, id);
    for (int id : p.enhancement_ids) put_i32(out, id);
    for (std::size_t c = 0; c < p.base.channels; ++c) {
        put_f32(out, p.base.mins[c]);
        put_f32(out, p.base.maxs[c]);
    }
    put_bytes(out, p.base.codes);
    for (std::size_t c = 0; c < p.enhancement_ids.size(); ++c) {
        put_f32(out, p.enhancement_mins[c]);
        put_f32(out, p.enhancement_maxs[c]);
    }
    put_u32(out, static_cast<std::uint32_t>(p.tiling.rows));
    put_u32(out, static_cast<std::uint32_t>(p.tiling.cols));
    put_u32(out, static_cast<std::uint32_t>(p.enhancement_bitstream.size()));
    put_bytes(out, p.enhancement_bitstream);
    return out;
}

inline CompressedPayload parse_payload(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes, "selection payload");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "FSSP", 4) != 0) {
        throw format_error("bad magic, expected \"FSSP\"", 0);
    }
    in.bytes(4);
    if (const auto v = in.u8(); v != 1) {
        throw format_error("unsupported payload version " + std::to_string(v), 4);
    }
    in.bytes(3);
    CompressedPayload p;
    p.channels = in.u32();
    p.height = in.u32();
    p.width = in.u32();
    const std::size_t kept = in.u32();
    const std::size_t at_qp = in.offset();
    p.qp = in.i32();
    if (p.channels == 0 || p.height == 0 || p.width == 0 || kept < 1 || kept > p.channels) {
        throw format_error("inconsistent payload dimensions", 8);
    }
    if (p.qp < 0 || p.qp > kMaxQp) {
        throw format_error("qp out of range", at_qp);
    }
    const std::size_t rest = p.channels - kept;
    in.need(4 * (p.channels + kept + rest));
    p.channel_ids.resize(p.channels);
    for (int& id : p.channel_ids) id = in.i32();
    p.base.channels = kept;
    p.base.height = p.height;
    p.base.width = p.width;
    p.base.channel_ids.resize(kept);
    for (int& id : p.base.channel_ids) id = in.i32();
    p.enhancement_ids.resize(rest);
    for (int& id : p.enhancement_ids) id = in.i32();
    p.base.mins.resize(kept);
    p.base.maxs.resize(kept);
    for (std::size_t c = 0; c < kept; ++c) {
        p.base.mins[c] = in.f32();
        p.base.maxs[c] = in.f32();
    }
    const auto codes = in.bytes(kept * p.height * p.width);
    p.base.codes.assign(codes.begin(), codes.end());
    p.enhancement_mins.resize(rest);
    p.enhancement_maxs.resize(rest);
    for (std::size_t c = 0; c < rest; ++c) {
        p.enhancement_mins[c] = in.f32();
        p.enhancement_maxs[c] = in.f32();
    }
    const std::size_t at_tiles = in.offset();
    p.tiling.rows = in.u32();
    p.tiling.cols = in.u32();
    p.tiling.count = rest;
    p.tiling.tile_height = p.height;
    p.tiling.tile_width = p.width;
    if (p.tiling.rows * p.tiling.cols < rest || (rest == 0) != (p.tiling.rows == 0)) {
        throw format_error("tile grid cannot hold the enhancement channels", at_tiles);
    }
    const std::size_t len = in.u32();
    const auto stream = in.bytes(len);
    p.enhancement_bitstream.assign(stream.begin(), stream.end());
    if (in.remaining() != 0) {
        throw format_error("trailing bytes after payload", in.offset());
    }
    if ((rest == 0) != p.enhancement_bitstream.empty()) {
        throw format_error("enhancement stream presence does not match the channel split", at_tiles + 8);
    }
    return p;
}

} // namespace mifs

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/tensor.hpp"

namespace mifs {

struct PatchOrigin {
    std::uint32_t sample = 0;
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

// Non-overlapping square patches pooled over samples, stored patch-major.
// Within a patch values are ordered channel, then row, then column.
struct PatchSet {
    int source_id = 0; // channel id (features) or task id (outputs)
    std::size_t side = 0;
    std::size_t length = 0; // side * side * channels
    std::vector<float> data;
    std::vector<PatchOrigin> origins;

    std::size_t size() const noexcept { return origins.size(); }
    std::span<const float> patch(std::size_t i) const { return {data.data() + i * length, length}; }

    void append(const PatchSet& other) {
        if (size() == 0 && length == 0) {
            side = other.side;
            length = other.length;
            source_id = other.source_id;
        } else if (other.length != length) {
            throw dimension_error("cannot pool patches of length " + std::to_string(other.length) +
                                  " with patches of length " + std::to_string(length));
        }
        data.insert(data.end(), other.data.begin(), other.data.end());
        origins.insert(origins.end(), other.origins.begin(), other.origins.end());
    }
};

inline void check_patch_side(const Tensor& t, std::size_t side) {
    if (side == 0) {
        throw dimension_error("patch side must be positive");
    }
    if (t.height % side != 0) {
        throw dimension_error("height " + std::to_string(t.height) + " is not divisible by patch side " +
                              std::to_string(side));
    }
    if (t.width % side != 0) {
        throw dimension_error("width " + std::to_string(t.width) + " is not divisible by patch side " +
                              std::to_string(side));
    }
}

namespace detail {
inline PatchSet extract_patches(const Tensor& t, std::size_t first_channel, std::size_t channel_count,
                                std::size_t side, std::uint32_t sample, int source_id) {
    PatchSet ps;
    ps.source_id = source_id;
    ps.side = side;
    ps.length = side * side * channel_count;
    const std::size_t rows = t.height / side, cols = t.width / side;
    ps.data.reserve(rows * cols * ps.length);
    ps.origins.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (std::size_t ch = first_channel; ch < first_channel + channel_count; ++ch) {
                for (std::size_t y = 0; y < side; ++y) {
                    const float* row = &t.values[(ch * t.height + r * side + y) * t.width + c * side];
                    ps.data.insert(ps.data.end(), row, row + side);
                }
            }
            ps.origins.push_back({sample, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
        }
    }
    return ps;
}
} // namespace detail

// One patch set per channel, patches in row-major grid order.
inline std::vector<PatchSet> patchify_channels(const Tensor& t, std::size_t side, std::uint32_t sample = 0) {
    check_patch_side(t, side);
    std::vector<PatchSet> out;
    out.reserve(t.channels);
    for (std::size_t ch = 0; ch < t.channels; ++ch) {
        out.push_back(detail::extract_patches(t, ch, 1, side, sample, t.channel_ids[ch]));
    }
    return out;
}

inline PatchSet patchify_channel(const Tensor& t, std::size_t channel, std::size_t side, std::uint32_t sample = 0) {
    check_patch_side(t, side);
    return detail::extract_patches(t, channel, 1, side, sample, t.channel_ids.at(channel));
}

// A single patch set whose patches concatenate all channels (used for outputs).
inline PatchSet patchify_joint(const Tensor& t, std::size_t side, std::uint32_t sample = 0, int source_id = 0) {
    check_patch_side(t, side);
    return detail::extract_patches(t, 0, t.channels, side, sample, source_id);
}

// Inverse of patchify_joint for the patches of one sample.
inline Tensor unpatchify_joint(const PatchSet& ps, std::size_t channels, std::size_t height, std::size_t width) {
    const std::size_t side = ps.side;
    if (side == 0 || height % side != 0 || width % side != 0 || ps.length != side * side * channels ||
        ps.size() != (height / side) * (width / side)) {
        throw dimension_error("patch set does not tile a " + std::to_string(channels) + "x" + std::to_string(height) +
                              "x" + std::to_string(width) + " tensor");
    }
    Tensor t(channels, height, width);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& o = ps.origins[i];
        auto p = ps.patch(i);
        std::size_t k = 0;
        for (std::size_t ch = 0; ch < channels; ++ch) {
            for (std::size_t y = 0; y < side; ++y) {
                for (std::size_t x = 0; x < side; ++x) {
                    t.at(ch, o.row * side + y, o.col * side + x) = p[k++];
                }
            }
        }
    }
    return t;
}

} // namespace mifs

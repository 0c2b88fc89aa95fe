#pragma once

// Per-channel uniform 8-bit quantization:
//   code = round(255 (v - min) / (max - min)),  v' = min + code (max - min) / 255
// A constant channel stores code 0 and dequantizes to min exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/tensor.hpp"

namespace mifs {

struct QuantizedTensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> codes;
    std::vector<float> mins;
    std::vector<float> maxs;
    std::vector<int> channel_ids;

    std::size_t plane() const noexcept { return height * width; }

    friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

inline std::uint8_t quantize_value(float v, float lo, float hi) {
    if (!(hi > lo)) {
        return 0;
    }
    const double q = std::round(255.0 * (static_cast<double>(v) - lo) / (static_cast<double>(hi) - lo));
    return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

inline float dequantize_value(std::uint8_t code, float lo, float hi) {
    if (!(hi > lo)) {
        return lo;
    }
    return static_cast<float>(lo + code * ((static_cast<double>(hi) - lo) / 255.0));
}

inline QuantizedTensor quantize8(const Tensor& t) {
    t.validate();
    QuantizedTensor q;
    q.channels = t.channels;
    q.height = t.height;
    q.width = t.width;
    q.channel_ids = t.channel_ids;
    q.codes.resize(t.size());
    q.mins.resize(t.channels);
    q.maxs.resize(t.channels);
    for (std::size_t ch = 0; ch < t.channels; ++ch) {
        const auto plane = t.channel(ch);
        auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
        q.mins[ch] = *lo;
        q.maxs[ch] = *hi;
        for (std::size_t i = 0; i < plane.size(); ++i) {
            q.codes[ch * t.plane() + i] = quantize_value(plane[i], *lo, *hi);
        }
    }
    return q;
}

inline Tensor dequantize8(const QuantizedTensor& q) {
    if (q.codes.size() != q.channels * q.plane() || q.mins.size() != q.channels || q.maxs.size() != q.channels) {
        throw domain_error("quantized tensor metadata does not match its shape");
    }
    Tensor t(q.channels, q.height, q.width);
    if (q.channel_ids.size() == q.channels) {
        t.channel_ids = q.channel_ids;
    }
    for (std::size_t ch = 0; ch < q.channels; ++ch) {
        if (q.mins[ch] > q.maxs[ch]) {
            throw domain_error("quantized channel " + std::to_string(ch) + " has min > max");
        }
        for (std::size_t i = 0; i < q.plane(); ++i) {
            t.values[ch * q.plane() + i] = dequantize_value(q.codes[ch * q.plane() + i], q.mins[ch], q.maxs[ch]);
        }
    }
    return t;
}

} // namespace mifs

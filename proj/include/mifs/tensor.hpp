#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mifs/error.hpp"

namespace mifs {

// C x H x W array of float32 values, channel-major then row-major.
//
// Used both for split-point feature tensors (one channel per feature map) and
// for task outputs (1 or 3 channels); the owning task of an output is recorded
// in the dataset manifest, not in the tensor.
struct Tensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;
    std::vector<int> channel_ids;

    Tensor() = default;

    Tensor(std::size_t c, std::size_t h, std::size_t w)
        : channels(c), height(h), width(w), values(c * h * w, 0.0f), channel_ids(c) {
        std::iota(channel_ids.begin(), channel_ids.end(), 0);
    }

    std::size_t plane() const noexcept { return height * width; }
    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return channels == 0 || height == 0 || width == 0; }

    float& at(std::size_t c, std::size_t y, std::size_t x) { return values[(c * height + y) * width + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const { return values[(c * height + y) * width + x]; }

    std::span<float> channel(std::size_t c) { return {values.data() + c * plane(), plane()}; }
    std::span<const float> channel(std::size_t c) const { return {values.data() + c * plane(), plane()}; }

    // Position of a channel label within this tensor.
    std::size_t index_of(int id) const {
        for (std::size_t i = 0; i < channel_ids.size(); ++i) {
            if (channel_ids[i] == id) {
                return i;
            }
        }
        throw domain_error("channel id " + std::to_string(id) + " not present in tensor");
    }

    void validate() const {
        if (empty()) {
            throw domain_error("tensor has a zero dimension (" + std::to_string(channels) + "x" +
                               std::to_string(height) + "x" + std::to_string(width) + ")");
        }
        if (values.size() != channels * height * width) {
            throw domain_error("tensor holds " + std::to_string(values.size()) + " values, expected " +
                               std::to_string(channels * height * width));
        }
        if (channel_ids.size() != channels) {
            throw domain_error("tensor has " + std::to_string(channel_ids.size()) + " channel ids for " +
                               std::to_string(channels) + " channels");
        }
        std::unordered_set<int> seen;
        for (int id : channel_ids) {
            if (!seen.insert(id).second) {
                throw domain_error("duplicate channel id " + std::to_string(id));
            }
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) {
                throw domain_error("non-finite value at flat index " + std::to_string(i));
            }
        }
    }

    bool same_shape(const Tensor& o) const noexcept {
        return channels == o.channels && height == o.height && width == o.width;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

using FeatureTensor = Tensor;
using TaskOutput = Tensor;

} // namespace mifs

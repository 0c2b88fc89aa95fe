#pragma once

// Channel tiling: `count` equally sized planes are laid out row-major on a
// rows x cols grid with rows = floor(sqrt(count)) and cols = ceil(count / rows).
// Unused grid cells are zero padding and are dropped by untile.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/tensor.hpp"

namespace mifs {

template <typename T>
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> pixels;

    T& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
    T at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

    friend bool operator==(const Image&, const Image&) = default;
};

struct TileDescriptor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t tile_height = 0;
    std::size_t tile_width = 0;
    std::size_t count = 0; // real (non-padding) planes

    std::size_t padding() const noexcept { return rows * cols - count; }
    std::size_t image_height() const noexcept { return rows * tile_height; }
    std::size_t image_width() const noexcept { return cols * tile_width; }

    friend bool operator==(const TileDescriptor&, const TileDescriptor&) = default;
};

inline TileDescriptor tile_grid(std::size_t count, std::size_t tile_height, std::size_t tile_width) {
    TileDescriptor d;
    d.count = count;
    d.tile_height = tile_height;
    d.tile_width = tile_width;
    if (count == 0) {
        return d;
    }
    std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(count)));
    while (rows * rows > count) {
        --rows;
    }
    while ((rows + 1) * (rows + 1) <= count) {
        ++rows;
    }
    d.rows = rows;
    d.cols = (count + rows - 1) / rows;
    return d;
}

template <typename T>
Image<T> tile(std::span<const T> planes, const TileDescriptor& d) {
    const std::size_t plane = d.tile_height * d.tile_width;
    if (planes.size() != d.count * plane) {
        throw domain_error("tile: " + std::to_string(planes.size()) + " values do not form " +
                           std::to_string(d.count) + " planes of " + std::to_string(d.tile_height) + "x" +
                           std::to_string(d.tile_width));
    }
    Image<T> img;
    img.height = d.image_height();
    img.width = d.image_width();
    img.pixels.assign(img.height * img.width, T{});
    for (std::size_t c = 0; c < d.count; ++c) {
        const std::size_t gy = (c / d.cols) * d.tile_height, gx = (c % d.cols) * d.tile_width;
        for (std::size_t y = 0; y < d.tile_height; ++y) {
            for (std::size_t x = 0; x < d.tile_width; ++x) {
                img.at(gy + y, gx + x) = planes[c * plane + y * d.tile_width + x];
            }
        }
    }
    return img;
}

template <typename T>
std::vector<T> untile(const Image<T>& img, const TileDescriptor& d) {
    if (img.height != d.image_height() || img.width != d.image_width() ||
        img.pixels.size() != img.height * img.width) {
        throw domain_error("untile: image is " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                           " but the descriptor expects " + std::to_string(d.image_height()) + "x" +
                           std::to_string(d.image_width()));
    }
    const std::size_t plane = d.tile_height * d.tile_width;
    std::vector<T> planes(d.count * plane);
    for (std::size_t c = 0; c < d.count; ++c) {
        const std::size_t gy = (c / d.cols) * d.tile_height, gx = (c % d.cols) * d.tile_width;
        for (std::size_t y = 0; y < d.tile_height; ++y) {
            for (std::size_t x = 0; x < d.tile_width; ++x) {
                planes[c * plane + y * d.tile_width + x] = img.at(gy + y, gx + x);
            }
        }
    }
    return planes;
}

// Tiles all channels of a tensor in their stored order.
inline std::pair<Image<float>, TileDescriptor> tile_tensor(const Tensor& t) {
    const auto d = tile_grid(t.channels, t.height, t.width);
    return {tile(std::span<const float>(t.values), d), d};
}

inline Tensor untile_tensor(const Image<float>& img, const TileDescriptor& d, const std::vector<int>& channel_ids = {}) {
    Tensor t(d.count, d.tile_height, d.tile_width);
    t.values = untile(img, d);
    if (!channel_ids.empty()) {
        if (channel_ids.size() != d.count) {
            throw domain_error("untile: " + std::to_string(channel_ids.size()) + " channel ids for " +
                               std::to_string(d.count) + " planes");
        }
        t.channel_ids = channel_ids;
    }
    return t;
}

} // namespace mifs

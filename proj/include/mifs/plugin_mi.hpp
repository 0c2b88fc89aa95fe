#pragma once

// Plug-in (maximum-likelihood) entropy and mutual information of discrete
// sequences, in nats. Sums run over observed cells in ascending order of the
// densified symbols, so the result does not depend on hash-table layout.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"

namespace mifs {

namespace detail {

// Maps symbols to 0..distinct-1 preserving order.
template <std::integral T>
std::vector<std::uint32_t> densify(std::span<const T> xs, std::size_t& distinct) {
    std::vector<T> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    distinct = sorted.size();
    std::vector<std::uint32_t> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), xs[i]) - sorted.begin());
    }
    return out;
}

inline double entropy_from_counts(const std::vector<std::size_t>& counts, double n) {
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c != 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

} // namespace detail

template <std::integral T>
double plugin_entropy(std::span<const T> xs) {
    if (xs.empty()) {
        throw domain_error("entropy of an empty sequence");
    }
    std::size_t k = 0;
    const auto dense = detail::densify(xs, k);
    std::vector<std::size_t> counts(k, 0);
    for (auto d : dense) {
        ++counts[d];
    }
    return detail::entropy_from_counts(counts, static_cast<double>(xs.size()));
}

// I = sum over observed (x, y) of p(x,y) ln[p(x,y) / (p(x) p(y))], clamped to
// [0, min(H(X), H(Y))] to absorb rounding.
template <std::integral X, std::integral Y>
double plugin_mi(std::span<const X> xs, std::span<const Y> ys) {
    if (xs.size() != ys.size()) {
        throw domain_error("plugin_mi: sequences differ in length (" + std::to_string(xs.size()) + " vs " +
                           std::to_string(ys.size()) + ")");
    }
    if (xs.empty()) {
        throw domain_error("plugin_mi: empty sequences");
    }
    std::size_t kx = 0, ky = 0;
    const auto dx = detail::densify(xs, kx);
    const auto dy = detail::densify(ys, ky);
    std::vector<std::size_t> cx(kx, 0), cy(ky, 0);
    std::vector<std::uint64_t> joint(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ++cx[dx[i]];
        ++cy[dy[i]];
        joint[i] = static_cast<std::uint64_t>(dx[i]) * ky + dy[i];
    }
    std::sort(joint.begin(), joint.end());
    const double n = static_cast<double>(xs.size());
    double mi = 0.0;
    for (std::size_t i = 0; i < joint.size();) {
        std::size_t j = i;
        while (j < joint.size() && joint[j] == joint[i]) {
            ++j;
        }
        const double nxy = static_cast<double>(j - i);
        const double nx = static_cast<double>(cx[joint[i] / ky]);
        const double ny = static_cast<double>(cy[joint[i] % ky]);
        mi += (nxy / n) * std::log(nxy * n / (nx * ny));
        i = j;
    }
    const double cap = std::min(detail::entropy_from_counts(cx, n), detail::entropy_from_counts(cy, n));
    return std::clamp(mi, 0.0, cap);
}

template <typename A, typename B>
double plugin_mi(const std::vector<A>& xs, const std::vector<B>& ys) {
    return plugin_mi(std::span<const A>(xs), std::span<const B>(ys));
}

} // namespace mifs

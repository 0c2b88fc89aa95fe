#pragma once

// Equal-width binning of feature patches into discrete symbols.
//
// Every patch value v is mapped to floor(B * (v - min) / (max - min)), clamped
// to [0, B-1], where [min, max] is the channel's range over the whole pooled
// dataset. The tuple of bin indices of a patch becomes one symbol:
//
//   h = 0x243F6A8885A308D3
//   for each bin index b (patch order): h = splitmix64(h ^ b)
//
// Collisions between distinct observed tuples are possible in principle;
// `exact_symbols` replaces the hash by dense ids assigned in order of first
// appearance, which is collision free.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/patch.hpp"
#include "mifs/rng.hpp"

namespace mifs {

struct ValueRange {
    double min = 0.0;
    double max = 0.0;

    bool constant() const noexcept { return !(max > min); }
};

inline ValueRange value_range(std::span<const float> values) {
    if (values.empty()) {
        throw domain_error("cannot take the range of an empty set of values");
    }
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {static_cast<double>(*lo), static_cast<double>(*hi)};
}

inline ValueRange value_range(const PatchSet& ps) { return value_range(std::span<const float>(ps.data)); }

struct BinningConfig {
    std::size_t bins = 8;
    // Range used for every dimension; computed from the patches when absent.
    std::optional<ValueRange> range;
    bool exact_symbols = false;
};

struct BinnedPatches {
    std::vector<std::uint64_t> symbols;
    ValueRange range;
    bool constant_channel = false;
};

inline std::uint32_t bin_index(double v, const ValueRange& r, std::size_t bins) {
    if (r.constant()) {
        return 0;
    }
    const double pos = std::floor(static_cast<double>(bins) * (v - r.min) / (r.max - r.min));
    if (!(pos > 0.0)) {
        return 0;
    }
    return static_cast<std::uint32_t>(std::min(pos, static_cast<double>(bins - 1)));
}

inline constexpr std::uint64_t kSymbolHashSeed = 0x243F6A8885A308D3ULL;

inline BinnedPatches bin_patches(const PatchSet& ps, const BinningConfig& cfg) {
    if (cfg.bins < 2) {
        throw domain_error("bin count must be at least 2, got " + std::to_string(cfg.bins));
    }
    BinnedPatches out;
    out.range = cfg.range ? *cfg.range : value_range(ps);
    out.constant_channel = out.range.constant();
    out.symbols.resize(ps.size());
    if (out.constant_channel) {
        std::fill(out.symbols.begin(), out.symbols.end(), std::uint64_t{0});
        return out;
    }
    if (!cfg.exact_symbols) {
        for (std::size_t i = 0; i < ps.size(); ++i) {
            std::uint64_t h = kSymbolHashSeed;
            for (float v : ps.patch(i)) {
                h = splitmix64(h ^ bin_index(v, out.range, cfg.bins));
            }
            out.symbols[i] = h;
        }
        return out;
    }
    std::map<std::vector<std::uint32_t>, std::uint64_t> ids;
    std::vector<std::uint32_t> tuple(ps.length);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        auto p = ps.patch(i);
        for (std::size_t d = 0; d < p.size(); ++d) {
            tuple[d] = bin_index(p[d], out.range, cfg.bins);
        }
        auto [it, inserted] = ids.try_emplace(tuple, ids.size());
        out.symbols[i] = it->second;
    }
    return out;
}

} // namespace mifs

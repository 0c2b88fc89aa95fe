#pragma once

// Per-channel importance scores and the descending orderings built from them.
//
//   mi  - plug-in MI between binned N x N feature patches of the channel and
//         K-means cluster labels of the aligned M x M output patches of a task
//   l1  - mean over samples of the channel's l1 norm (task independent)
//   l2  - same with the l2 norm
//   gm  - distance of the channel's dataset-mean map from the geometric median
//         of all channels' mean maps (task independent)
//
// Orderings sort by descending score, ties by ascending channel id.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mifs/binning.hpp"
#include "mifs/error.hpp"
#include "mifs/geometric_median.hpp"
#include "mifs/io_util.hpp"
#include "mifs/kmeans.hpp"
#include "mifs/manifest.hpp"
#include "mifs/parallel.hpp"
#include "mifs/patch.hpp"
#include "mifs/plugin_mi.hpp"

namespace mifs {

enum class Criterion { mi, l1, l2, gm };

inline std::string to_string(Criterion c) {
    switch (c) {
    case Criterion::mi: return "mi";
    case Criterion::l1: return "l1";
    case Criterion::l2: return "l2";
    case Criterion::gm: return "gm";
    }
    return "?";
}

inline Criterion criterion_from_string(const std::string& s) {
    if (s == "mi") return Criterion::mi;
    if (s == "l1") return Criterion::l1;
    if (s == "l2") return Criterion::l2;
    if (s == "gm") return Criterion::gm;
    throw domain_error("unknown importance criterion '" + s + "' (expected mi, l1, l2 or gm)");
}

struct ImportanceTable {
    Criterion criterion = Criterion::mi;
    std::optional<int> task_id; // set for mi only
    std::vector<int> channel_ids;
    std::vector<double> scores; // parallel to channel_ids
    std::vector<int> ordering;  // channel ids, most important first

    double score_of(int id) const {
        for (std::size_t i = 0; i < channel_ids.size(); ++i) {
            if (channel_ids[i] == id) {
                return scores[i];
            }
        }
        throw domain_error("channel id " + std::to_string(id) + " not in importance table");
    }

    // 0-based rank of a channel in the ordering.
    std::size_t rank_of(int id) const {
        auto it = std::find(ordering.begin(), ordering.end(), id);
        if (it == ordering.end()) {
            throw domain_error("channel id " + std::to_string(id) + " not in importance ordering");
        }
        return static_cast<std::size_t>(it - ordering.begin());
    }

    std::vector<int> top(std::size_t count) const {
        count = std::min(count, ordering.size());
        return {ordering.begin(), ordering.begin() + static_cast<std::ptrdiff_t>(count)};
    }

    friend bool operator==(const ImportanceTable&, const ImportanceTable&) = default;
};

inline std::vector<int> importance_order(const std::vector<int>& ids, const std::vector<double>& scores) {
    if (ids.size() != scores.size()) {
        throw domain_error("importance_order: ids and scores differ in length");
    }
    std::vector<std::size_t> idx(ids.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return ids[a] < ids[b];
    });
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[i] = ids[idx[i]];
    }
    return out;
}

inline ImportanceTable make_table(Criterion c, std::optional<int> task, std::vector<int> ids,
                                  std::vector<double> scores) {
    ImportanceTable t;
    t.criterion = c;
    t.task_id = task;
    t.ordering = importance_order(ids, scores);
    t.channel_ids = std::move(ids);
    t.scores = std::move(scores);
    return t;
}

struct MIImportanceOptions {
    std::size_t feature_side = 8;
    std::size_t output_side = 64;
    std::size_t k = 8;
    std::size_t bins = 8;
    std::uint64_t seed = 7;
    std::size_t max_iters = 300;
    double tol = 1e-6;
    bool exact_symbols = false;

    static MIImportanceOptions for_dataset(const Dataset& d) {
        MIImportanceOptions o;
        o.feature_side = d.patch.feature_side;
        o.output_side = d.patch.output_side;
        return o;
    }
};

// Clusters the task's output patches once and scores every channel against
// the shared labels.
inline ImportanceTable mi_importance(const Dataset& data, int task_id, const MIImportanceOptions& opt) {
    const auto& outputs = data.task_outputs(task_id);
    if (data.features.empty()) {
        throw domain_error("dataset has no samples");
    }
    PatchSet out_patches;
    for (std::size_t s = 0; s < outputs.size(); ++s) {
        out_patches.append(patchify_joint(outputs[s], opt.output_side, static_cast<std::uint32_t>(s), task_id));
    }
    const auto model = kmeans(out_patches, KMeansOptions{opt.k, opt.seed, opt.max_iters, opt.tol});

    const Tensor& ref = data.features.front();
    check_patch_side(ref, opt.feature_side);
    const std::size_t feature_patches = (ref.height / opt.feature_side) * (ref.width / opt.feature_side);
    if (feature_patches * data.sample_count() != out_patches.size()) {
        throw dimension_error("feature grid (" + std::to_string(ref.height / opt.feature_side) + "x" +
                              std::to_string(ref.width / opt.feature_side) +
                              ") does not match the output patch grid of task " + std::to_string(task_id));
    }
    std::vector<double> scores(ref.channels, 0.0);
    parallel_for(ref.channels, [&](std::size_t ch) {
        PatchSet pooled;
        for (std::size_t s = 0; s < data.sample_count(); ++s) {
            pooled.append(patchify_channel(data.features[s], ch, opt.feature_side, static_cast<std::uint32_t>(s)));
        }
        const auto binned = bin_patches(pooled, BinningConfig{opt.bins, std::nullopt, opt.exact_symbols});
        scores[ch] = plugin_mi(binned.symbols, model.labels);
    });
    return make_table(Criterion::mi, task_id, ref.channel_ids, std::move(scores));
}

inline ImportanceTable norm_importance(const Dataset& data, int p) {
    if (p != 1 && p != 2) {
        throw domain_error("norm order must be 1 or 2, got " + std::to_string(p));
    }
    if (data.features.empty()) {
        throw domain_error("dataset has no samples");
    }
    const Tensor& ref = data.features.front();
    std::vector<double> scores(ref.channels, 0.0);
    for (const Tensor& t : data.features) {
        for (std::size_t ch = 0; ch < t.channels; ++ch) {
            double acc = 0.0;
            for (float v : t.channel(ch)) {
                acc += p == 1 ? std::abs(static_cast<double>(v)) : static_cast<double>(v) * v;
            }
            scores[ch] += p == 1 ? acc : std::sqrt(acc);
        }
    }
    for (double& s : scores) {
        s /= static_cast<double>(data.sample_count());
    }
    return make_table(p == 1 ? Criterion::l1 : Criterion::l2, std::nullopt, ref.channel_ids, std::move(scores));
}

// Channel representatives: per-channel maps averaged over samples, flattened.
inline std::vector<double> channel_mean_maps(const Dataset& data) {
    const Tensor& ref = data.features.front();
    std::vector<double> reps(ref.size(), 0.0);
    for (const Tensor& t : data.features) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            reps[i] += t.values[i];
        }
    }
    for (double& v : reps) {
        v /= static_cast<double>(data.sample_count());
    }
    return reps;
}

inline ImportanceTable gm_importance_from_representatives(const std::vector<int>& ids, std::span<const double> reps,
                                                          std::size_t dim, double tol = 1e-9,
                                                          std::size_t max_iters = 1000) {
    if (ids.size() < 2) {
        throw domain_error("geometric-median importance needs at least 2 channels");
    }
    const auto gm = geometric_median(reps, dim, tol, max_iters);
    std::vector<double> scores(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = reps[i * dim + d] - gm.median[d];
            s += diff * diff;
        }
        scores[i] = std::sqrt(s);
    }
    return make_table(Criterion::gm, std::nullopt, ids, std::move(scores));
}

inline ImportanceTable gm_importance(const Dataset& data, double tol = 1e-9, std::size_t max_iters = 1000) {
    if (data.features.empty()) {
        throw domain_error("dataset has no samples");
    }
    const Tensor& ref = data.features.front();
    const auto reps = channel_mean_maps(data);
    return gm_importance_from_representatives(ref.channel_ids, reps, ref.plane(), tol, max_iters);
}

// ---- serialization ----

inline nlohmann::json to_json(const ImportanceTable& t) {
    nlohmann::json j;
    j["criterion"] = to_string(t.criterion);
    j["task_id"] = t.task_id ? nlohmann::json(*t.task_id) : nlohmann::json(nullptr);
    j["channel_ids"] = t.channel_ids;
    j["scores"] = t.scores;
    j["ordering"] = t.ordering;
    return j;
}

inline ImportanceTable importance_from_json(const nlohmann::json& j) {
    try {
        ImportanceTable t;
        t.criterion = criterion_from_string(j.at("criterion").get<std::string>());
        if (!j.at("task_id").is_null()) {
            t.task_id = j.at("task_id").get<int>();
        }
        t.channel_ids = j.at("channel_ids").get<std::vector<int>>();
        t.scores = j.at("scores").get<std::vector<double>>();
        t.ordering = j.at("ordering").get<std::vector<int>>();
        if (t.scores.size() != t.channel_ids.size()) {
            throw domain_error("importance table: scores and channel_ids differ in length");
        }
        auto sorted_ids = t.channel_ids, sorted_order = t.ordering;
        std::sort(sorted_ids.begin(), sorted_ids.end());
        std::sort(sorted_order.begin(), sorted_order.end());
        if (sorted_ids != sorted_order) {
            throw domain_error("importance table: ordering is not a permutation of channel_ids");
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("malformed importance table: ") + e.what());
    }
}

inline ImportanceTable load_importance(const fs::path& path) {
    try {
        return importance_from_json(nlohmann::json::parse(read_text(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what(), e.byte);
    }
}

inline std::string importance_csv(const ImportanceTable& t) {
    std::string out = "rank,channel_id,score\n";
    for (std::size_t r = 0; r < t.ordering.size(); ++r) {
        out += format_int(r + 1) + "," + format_int(t.ordering[r]) + "," + format_double(t.score_of(t.ordering[r])) +
               "\n";
    }
    return out;
}

} // namespace mifs

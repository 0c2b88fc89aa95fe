#pragma once

// Task distortion, weighted total distortion and winner maps over the simplex
// of task-preference weights.
//
//   D_j = |A_j(full) - A_j(selected)| / A_j(full)
//   D   = sum_j w_j D_j,   w_j >= 0, sum w_j = 1
//
// The absolute value makes an improvement count as distortion too; this is
// kept as is, also for lower-is-better metrics.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/io_util.hpp"

namespace mifs {

enum class Direction { higher_better, lower_better };

inline std::string to_string(Direction d) { return d == Direction::higher_better ? "higher" : "lower"; }

inline Direction direction_from_string(const std::string& s) {
    if (s == "higher" || s == "higher-better" || s == "higher_better") return Direction::higher_better;
    if (s == "lower" || s == "lower-better" || s == "lower_better") return Direction::lower_better;
    throw domain_error("unknown metric direction '" + s + "'");
}

// A selection operating point: C' retained channels, and qp for soft
// selection (qp < 0 means hard selection).
struct SelectionKey {
    long long keep_count = 0;
    int qp = -1;

    auto operator<=>(const SelectionKey&) const = default;

    std::string label() const {
        return "keep=" + std::to_string(keep_count) + (qp >= 0 ? " qp=" + std::to_string(qp) : std::string(" hard"));
    }
};

struct AccuracyRecord {
    int task_id = 0;
    std::string metric;
    Direction direction = Direction::higher_better;
    std::optional<double> full;
    std::map<std::string, std::map<SelectionKey, double>> selected; // criterion -> key -> accuracy

    double full_accuracy() const {
        if (!full) {
            throw domain_error("task " + std::to_string(task_id) + " has no full-model accuracy");
        }
        return *full;
    }

    double accuracy(const std::string& criterion, const SelectionKey& key) const {
        auto c = selected.find(criterion);
        if (c != selected.end()) {
            auto k = c->second.find(key);
            if (k != c->second.end()) {
                return k->second;
            }
        }
        throw domain_error("no accuracy for task " + std::to_string(task_id) + ", criterion '" + criterion + "', " +
                           key.label());
    }
};

inline double task_distortion(double full, double selected) {
    if (full == 0.0 || !std::isfinite(full) || !std::isfinite(selected)) {
        throw domain_error("task distortion needs a finite, non-zero full-model accuracy");
    }
    return std::abs(full - selected) / full;
}

inline double task_distortion(const AccuracyRecord& rec, const std::string& criterion, const SelectionKey& key) {
    return task_distortion(rec.full_accuracy(), rec.accuracy(criterion, key));
}

inline void check_weights(std::span<const double> weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw domain_error("task weights must be non-negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw domain_error("task weights sum to " + format_double(sum) + ", expected 1");
    }
}

inline double total_distortion(std::span<const double> distortions, std::span<const double> weights) {
    if (distortions.size() != weights.size()) {
        throw domain_error("one weight per task distortion is required");
    }
    check_weights(weights);
    double total = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        total += weights[j] * distortions[j];
    }
    return total;
}

inline constexpr const char* kTieLabel = "tie";
inline constexpr double kTieTolerance = 1e-12;

struct SimplexPoint {
    std::vector<std::size_t> grid;  // integer coordinates summing to the resolution
    std::vector<double> weights;    // grid / resolution
    std::vector<double> totals;     // per criterion, same order as the map's criteria
    std::string winner;
    double x = 0.0, y = 0.0;        // Cartesian position for three tasks, else 0
};

struct SimplexWinnerMap {
    std::size_t resolution = 0;
    std::vector<int> task_ids;
    std::vector<std::string> criteria;
    std::vector<SimplexPoint> points;
    std::map<std::string, double> win_fractions; // includes "tie"
};

namespace detail {
inline void simplex_grid(std::size_t parts, std::size_t remaining, std::vector<std::size_t>& cur,
                         std::vector<std::vector<std::size_t>>& out) {
    if (cur.size() + 1 == parts) {
        cur.push_back(remaining);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (std::size_t i = 0; i <= remaining; ++i) {
        cur.push_back(i);
        simplex_grid(parts, remaining - i, cur, out);
        cur.pop_back();
    }
}
} // namespace detail

// All integer vectors of `parts` non-negative entries summing to `resolution`,
// in lexicographic order.
inline std::vector<std::vector<std::size_t>> simplex_grid(std::size_t parts, std::size_t resolution) {
    std::vector<std::vector<std::size_t>> out;
    if (parts == 0) {
        return out;
    }
    std::vector<std::size_t> cur;
    detail::simplex_grid(parts, resolution, cur, out);
    return out;
}

// Per-task distortions use each criterion's own accuracy at `key`. Ties
// (within 1e-12 of the minimum) are labelled "tie".
inline SimplexWinnerMap sweep_simplex(std::span<const AccuracyRecord> records, std::span<const std::string> criteria,
                                      const SelectionKey& key, std::size_t resolution) {
    if (criteria.size() < 2) {
        throw domain_error("a simplex sweep compares at least two criteria");
    }
    if (records.empty()) {
        throw domain_error("a simplex sweep needs at least one task");
    }
    if (resolution == 0) {
        throw domain_error("simplex resolution must be positive");
    }
    SimplexWinnerMap map;
    map.resolution = resolution;
    map.criteria.assign(criteria.begin(), criteria.end());
    const std::size_t tasks = records.size();
    std::vector<std::vector<double>> dist(criteria.size(), std::vector<double>(tasks));
    for (std::size_t j = 0; j < tasks; ++j) {
        map.task_ids.push_back(records[j].task_id);
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            dist[c][j] = task_distortion(records[j], criteria[c], key);
        }
    }
    std::map<std::string, std::size_t> wins;
    for (const auto& c : map.criteria) {
        wins[c] = 0;
    }
    wins[kTieLabel] = 0;
    for (auto& g : simplex_grid(tasks, resolution)) {
        SimplexPoint pt;
        pt.weights.resize(tasks);
        for (std::size_t j = 0; j < tasks; ++j) {
            pt.weights[j] = static_cast<double>(g[j]) / static_cast<double>(resolution);
        }
        double best = 0.0;
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            double total = 0.0;
            for (std::size_t j = 0; j < tasks; ++j) {
                total += pt.weights[j] * dist[c][j];
            }
            pt.totals.push_back(total);
            best = c == 0 ? total : std::min(best, total);
        }
        std::size_t at_best = 0;
        for (std::size_t c = 0; c < criteria.size(); ++c) {
            if (pt.totals[c] - best <= kTieTolerance) {
                ++at_best;
                pt.winner = map.criteria[c];
            }
        }
        if (at_best > 1) {
            pt.winner = kTieLabel;
        }
        ++wins[pt.winner];
        if (tasks == 3) {
            pt.x = pt.weights[1] + 0.5 * pt.weights[2];
            pt.y = pt.weights[2] * std::numbers::sqrt3 / 2.0;
        }
        pt.grid = std::move(g);
        map.points.push_back(std::move(pt));
    }
    for (const auto& [label, count] : wins) {
        map.win_fractions[label] = static_cast<double>(count) / static_cast<double>(map.points.size());
    }
    return map;
}

// ---- accuracy CSV ----
//
// Header names the columns (any order): task_id, metric, direction, criterion,
// keep_count, qp, accuracy. criterion "full" marks the all-channel accuracy;
// an empty or negative qp marks hard selection.

inline std::vector<AccuracyRecord> parse_accuracy_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw domain_error("accuracy CSV is empty");
    }
    const auto header = split(trim(line), ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[std::string(trim(header[i]))] = i;
    }
    for (const char* name : {"task_id", "metric", "direction", "criterion", "keep_count", "qp", "accuracy"}) {
        if (!col.count(name)) {
            throw domain_error(std::string("accuracy CSV lacks column '") + name + "'");
        }
    }
    std::map<int, AccuracyRecord> by_task;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(trim(line), ',');
        if (cells.size() != header.size()) {
            throw domain_error("accuracy CSV line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, expected " + std::to_string(header.size()));
        }
        auto cell = [&](const char* name) { return std::string(trim(cells[col[name]])); };
        const int task = static_cast<int>(parse_int(cell("task_id"), "task_id"));
        auto& rec = by_task[task];
        rec.task_id = task;
        rec.metric = cell("metric");
        rec.direction = direction_from_string(cell("direction"));
        const double acc = parse_double(cell("accuracy"), "accuracy");
        if (!std::isfinite(acc)) {
            throw domain_error("non-finite accuracy on line " + std::to_string(line_no));
        }
        const std::string criterion = cell("criterion");
        if (criterion == "full") {
            rec.full = acc;
            continue;
        }
        SelectionKey key;
        key.keep_count = parse_int(cell("keep_count"), "keep_count");
        const std::string qp = cell("qp");
        key.qp = qp.empty() ? -1 : static_cast<int>(parse_int(qp, "qp"));
        if (key.qp < 0) {
            key.qp = -1;
        }
        rec.selected[criterion][key] = acc;
    }
    std::vector<AccuracyRecord> out;
    for (auto& [task, rec] : by_task) {
        if (!rec.full) {
            throw domain_error("task " + std::to_string(task) + " has no 'full' accuracy row");
        }
        if (*rec.full == 0.0) {
            throw domain_error("task " + std::to_string(task) + " has a zero full-model accuracy");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<AccuracyRecord> parse_accuracy_csv(const std::string& text) {
    std::istringstream in(text);
    return parse_accuracy_csv(in);
}

inline std::string accuracy_csv(std::span<const AccuracyRecord> records) {
    std::string out = "task_id,metric,direction,criterion,keep_count,qp,accuracy\n";
    for (const auto& r : records) {
        const std::string prefix = format_int(r.task_id) + "," + r.metric + "," + to_string(r.direction) + ",";
        if (r.full) {
            out += prefix + "full,,," + format_double(*r.full) + "\n";
        }
        for (const auto& [criterion, points] : r.selected) {
            for (const auto& [key, acc] : points) {
                out += prefix + criterion + "," + format_int(key.keep_count) + "," +
                       (key.qp >= 0 ? format_int(key.qp) : std::string()) + "," + format_double(acc) + "\n";
            }
        }
    }
    return out;
}

} // namespace mifs

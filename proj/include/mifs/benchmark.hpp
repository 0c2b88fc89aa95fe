#pragma once

// Synthetic benchmark: importance orderings per criterion, hard and soft
// selection at several keep fractions and QPs, scored with the proxy head.
// The resulting AccuracyRecords feed the multi-objective sweep.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "mifs/importance.hpp"
#include "mifs/multiobjective.hpp"
#include "mifs/selection.hpp"
#include "mifs/synth.hpp"

namespace mifs {

struct BenchmarkConfig {
    std::vector<Criterion> criteria{Criterion::mi, Criterion::l1, Criterion::l2, Criterion::gm};
    std::vector<double> keep_fractions{1.0, 0.9375, 0.875, 0.75, 0.5};
    std::vector<int> qps{10, 20, 30, 40};
    std::size_t k = 8;
    std::size_t bins = 8;
    std::uint64_t seed = 7;
};

struct BenchmarkResult {
    // Tables keyed by criterion name; MI tables are per task, the others shared.
    std::map<std::string, std::vector<ImportanceTable>> tables;
    std::vector<AccuracyRecord> records; // one per task
};

// Reconstructions of every sample under one plan.
inline std::vector<Tensor> apply_plan(const std::vector<Tensor>& features, const SelectionPlan& plan) {
    std::vector<Tensor> out(features.size());
    parallel_for(features.size(), [&](std::size_t s) {
        out[s] = plan.mode == SelectionMode::hard ? hard_select(features[s], plan).reconstruction
                                                  : reconstruct(soft_select(features[s], plan));
    });
    return out;
}

inline BenchmarkResult run_benchmark(const SynthSpec& raw, const BenchmarkConfig& cfg) {
    const SynthSpec spec = raw.resolved();
    const Dataset data = generate_dataset(spec);
    const ProxyEvaluator eval(spec);
    BenchmarkResult res;

    MIImportanceOptions mopt = MIImportanceOptions::for_dataset(data);
    mopt.k = cfg.k;
    mopt.bins = cfg.bins;
    mopt.seed = cfg.seed;
    for (Criterion c : cfg.criteria) {
        auto& tabs = res.tables[to_string(c)];
        if (c == Criterion::mi) {
            for (int task : data.task_ids) {
                tabs.push_back(mi_importance(data, task, mopt));
            }
        } else if (c == Criterion::gm) {
            tabs.push_back(gm_importance(data));
        } else {
            tabs.push_back(norm_importance(data, c == Criterion::l1 ? 1 : 2));
        }
    }

    for (int task : data.task_ids) {
        AccuracyRecord rec;
        rec.task_id = task;
        rec.metric = "psnr";
        rec.direction = Direction::higher_better;
        rec.full = eval(data.features, static_cast<std::size_t>(task));
        res.records.push_back(std::move(rec));
    }

    const std::size_t channels = spec.channels;
    for (Criterion c : cfg.criteria) {
        const auto& tabs = res.tables.at(to_string(c));
        // Evaluate every distinct ordering once; shared tables serve all tasks.
        for (std::size_t ti = 0; ti < tabs.size(); ++ti) {
            std::vector<std::size_t> tasks;
            if (tabs.size() == 1) {
                for (std::size_t j = 0; j < spec.tasks; ++j) {
                    tasks.push_back(j);
                }
            } else {
                tasks.push_back(ti);
            }
            for (double f : cfg.keep_fractions) {
                SelectionPlan plan;
                plan.ordering = tabs[ti].ordering;
                plan.keep_count = SelectionPlan::keep_count_for(f, channels);
                plan.mode = SelectionMode::hard;
                const auto hard = apply_plan(data.features, plan);
                for (std::size_t j : tasks) {
                    res.records[j].selected[to_string(c)][{static_cast<long long>(plan.keep_count), -1}] =
                        eval(hard, j);
                }
                if (plan.keep_count == channels) {
                    continue;
                }
                plan.mode = SelectionMode::soft;
                for (int qp : cfg.qps) {
                    plan.qp = qp;
                    const auto soft = apply_plan(data.features, plan);
                    for (std::size_t j : tasks) {
                        res.records[j].selected[to_string(c)][{static_cast<long long>(plan.keep_count), qp}] =
                            eval(soft, j);
                    }
                }
            }
        }
    }
    return res;
}

} // namespace mifs

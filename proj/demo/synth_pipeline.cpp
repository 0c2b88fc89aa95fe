// Planted-relevance dataset -> MI and l2 rankings -> 50% hard and soft
// selection -> proxy PSNR per task.

#include <cstdio>

#include "mifs/benchmark.hpp"

int main() {
    using namespace mifs;
    SynthSpec spec;
    spec.samples = 100;
    spec = spec.resolved();

    const Dataset data = generate_dataset(spec);
    const ProxyEvaluator eval(spec);
    const auto l2 = norm_importance(data, 2);
    const std::size_t keep = SelectionPlan::keep_count_for(0.5, spec.channels);

    for (std::size_t j = 0; j < spec.tasks; ++j) {
        const auto mi = mi_importance(data, static_cast<int>(j), MIImportanceOptions::for_dataset(data));
        std::printf("task %zu  relevant:", j);
        for (int c : spec.relevant[j]) {
            std::printf(" %d", c);
        }
        std::printf("\n  mi top:");
        for (int c : mi.top(spec.relevant[j].size())) {
            std::printf(" %d", c);
        }
        std::printf("\n  l2 top:");
        for (int c : l2.top(spec.relevant[j].size())) {
            std::printf(" %d", c);
        }
        std::printf("\n");

        for (const auto* t : {&mi, &l2}) {
            SelectionPlan plan;
            plan.ordering = t->ordering;
            plan.keep_count = keep;
            const double hard = eval(apply_plan(data.features, plan), j);
            plan.mode = SelectionMode::soft;
            plan.qp = 30;
            const double soft = eval(apply_plan(data.features, plan), j);
            std::printf("  %-2s keep %zu/%zu: hard %.2f dB, soft qp30 %.2f dB\n", to_string(t->criterion).c_str(),
                        keep, spec.channels, hard, soft);
        }
    }
    return 0;
}

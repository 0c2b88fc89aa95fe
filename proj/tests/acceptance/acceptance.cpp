// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
// usage: mifs_acceptance <path to mifs CLI> <work dir>

#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "mifs/benchmark.hpp"
#include "mifs/gaussian.hpp"

using namespace mifs;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED " + what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt2(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::set<int> as_set(const std::vector<int>& v) { return {v.begin(), v.end()}; }

// ---- shared Gaussian runs ----

struct GaussianRuns {
    std::vector<MIEstimateRecord> one_d, two_d;
    double one_d_seconds = 0.0;
};

const GaussianRuns& gaussian_runs() {
    static const GaussianRuns runs = [] {
        GaussianRuns r;
        ValidationConfig cfg;
        cfg.repeats = 1;
        const auto t0 = std::chrono::steady_clock::now();
        r.one_d = run_validation_1d(cfg);
        r.one_d_seconds = seconds_since(t0);
        r.two_d = run_validation_2d(cfg);
        return r;
    }();
    return runs;
}

// mean estimate per (rho, K)
std::map<std::pair<double, std::size_t>, double> mean_estimates(const std::vector<MIEstimateRecord>& recs) {
    std::map<std::pair<double, std::size_t>, std::pair<double, int>> acc;
    for (const auto& r : recs) {
        auto& a = acc[{r.rho, r.k}];
        a.first += r.estimate_nats;
        ++a.second;
    }
    std::map<std::pair<double, std::size_t>, double> out;
    for (const auto& [key, a] : acc) {
        out[key] = a.first / a.second;
    }
    return out;
}

Outcome c1() {
    Outcome o;
    const auto& g = gaussian_runs();
    double worst = -INFINITY;
    for (const auto& r : g.one_d) {
        worst = std::max(worst, r.estimate_nats - r.true_mi_nats);
        o.check(r.estimate_nats <= r.true_mi_nats + 0.01,
                fmt("rho=%g K=", r.rho) + std::to_string(r.k) + " estimate above truth + 0.01");
        if (r.rho == 0.9 && r.k == 32) {
            const double ratio = r.estimate_nats / r.true_mi_nats;
            o.note(fmt("rho=0.9 K=32 estimate/truth %.4f", ratio));
            o.check(ratio >= 0.80, "rho=0.9 K=32 estimate below 0.80 x truth");
        }
    }
    o.note(fmt("max(estimate - truth) %.5f nats", worst));
    o.note(fmt("1-D grid runtime %.1f s", g.one_d_seconds));
    o.check(g.one_d_seconds < 120.0, "runtime >= 2 min");
    return o;
}

Outcome c2() {
    Outcome o;
    ValidationConfig cfg;
    cfg.rhos = {0.9};
    cfg.ks = {8};
    cfg.repeats = 5;
    const auto recs = run_validation_1d(cfg);
    double mean = 0.0;
    for (const auto& r : recs) {
        mean += r.estimate_nats;
    }
    mean /= static_cast<double>(recs.size());
    double var = 0.0;
    for (const auto& r : recs) {
        var += (r.estimate_nats - mean) * (r.estimate_nats - mean);
    }
    var /= static_cast<double>(recs.size() - 1);
    o.note(fmt2("5 seeds: mean %.6f nats, variance %.3e nats^2", mean, var));
    o.check(recs.size() == 5, "expected 5 estimates");
    o.check(var <= 1e-6, "variance above 1e-6");
    return o;
}

Outcome c3() {
    Outcome o;
    const auto& g = gaussian_runs();
    double worst = -INFINITY;
    for (const auto& r : g.two_d) {
        worst = std::max(worst, r.estimate_nats - r.true_mi_nats);
        o.check(r.estimate_nats <= r.true_mi_nats + 0.01,
                fmt("rho=%g K=", r.rho) + std::to_string(r.k) + " 2-D estimate above patched truth + 0.01");
    }
    o.note(fmt("max(estimate - patched truth) %.5f nats", worst));
    double gap = INFINITY;
    for (double rho : ValidationConfig{}.rhos) {
        const double eq4 = true_mi_scalar(rho);
        const double eq6 = true_mi_gaussian(correlated_pair(2, rho));
        const double closed = -std::log(1.0 - rho * rho);
        o.check(std::abs(eq6 - closed) <= 1e-12, fmt("rho=%g determinant MI off closed form", rho));
        o.check(eq4 <= eq6 + 1e-12, fmt("rho=%g patched truth above 2-D truth", rho));
        if (rho != 0.0) {
            gap = std::min(gap, eq6 - eq4);
        }
    }
    o.note(fmt("min(2-D truth - patched truth) over rho != 0: %.5f nats", gap));
    return o;
}

Outcome c4() {
    Outcome o;
    const auto& g = gaussian_runs();
    for (const auto* recs : {&g.one_d, &g.two_d}) {
        const auto means = mean_estimates(*recs);
        double worst_drop = 0.0;
        for (double rho : ValidationConfig{}.rhos) {
            if (rho < 0.3) {
                continue;
            }
            double prev = -INFINITY;
            for (std::size_t k : ValidationConfig{}.ks) {
                const double e = means.at({rho, k});
                worst_drop = std::max(worst_drop, prev - e);
                o.check(e >= prev - 0.005, fmt("rho=%g estimate drops at K=", rho) + std::to_string(k));
                prev = e;
            }
        }
        o.note(std::string(recs == &g.one_d ? "1-D" : "2-D") + fmt(" largest drop in K %.5f nats", worst_drop));
    }
    return o;
}

// ---- synthetic benchmark ----

struct SynthRuns {
    SynthSpec spec;
    Dataset data;
};

const SynthRuns& default_synth() {
    static const SynthRuns r = [] {
        SynthRuns s;
        s.spec = SynthSpec{}.resolved();
        s.data = generate_dataset(s.spec);
        return s;
    }();
    return r;
}

std::vector<std::set<int>> mi_top_sets(const Dataset& d, const SynthSpec& spec) {
    std::vector<std::set<int>> out;
    const auto opt = MIImportanceOptions::for_dataset(d);
    for (std::size_t j = 0; j < spec.tasks; ++j) {
        out.push_back(as_set(mi_importance(d, static_cast<int>(j), opt).top(spec.relevant[j].size())));
    }
    return out;
}

Outcome c5() {
    Outcome o;
    const auto& base = default_synth();
    const auto ref_sets = mi_top_sets(base.data, base.spec);
    const auto ref_l2 = norm_importance(base.data, 2);
    double worst_ratio = 0.0;
    std::size_t variants = 0;
    for (int c = 0; c < static_cast<int>(base.spec.channels); ++c) {
        for (float s : {0.01f, 100.0f}) {
            Dataset d = base.data;
            for (auto& f : d.features) {
                for (float& v : f.channel(static_cast<std::size_t>(c))) {
                    v *= s;
                }
            }
            ++variants;
            o.check(mi_top_sets(d, base.spec) == ref_sets,
                    "MI top sets changed when channel " + std::to_string(c) + fmt(" was scaled by %g", s));
            const double ratio = norm_importance(d, 2).score_of(c) / ref_l2.score_of(c);
            const double rel = std::abs(ratio / std::abs(double(s)) - 1.0);
            worst_ratio = std::max(worst_ratio, rel);
            o.check(rel <= 1e-6, "l2 score of channel " + std::to_string(c) + fmt(" off factor %g", s));
        }
    }
    o.note(std::to_string(variants) + " scaled variants, MI top sets unchanged in all");
    o.note(fmt("max relative deviation of l2 ratio from |s|: %.2e", worst_ratio));

    // constructed flip: the l2-last channel scaled by 100 becomes l2-first
    const int last = ref_l2.ordering.back();
    Dataset d = base.data;
    for (auto& f : d.features) {
        for (float& v : f.channel(static_cast<std::size_t>(last))) {
            v *= 100.0f;
        }
    }
    const auto flipped = norm_importance(d, 2);
    o.note("l2 rank of channel " + std::to_string(last) + ": " + std::to_string(ref_l2.rank_of(last) + 1) + " -> " +
           std::to_string(flipped.rank_of(last) + 1));
    o.check(flipped.ordering.front() == last, "l2 rank flip did not happen");
    o.check(mi_top_sets(d, base.spec) == ref_sets, "MI top sets changed under the flip");
    return o;
}

double precision(const std::set<int>& got, const std::vector<int>& want) {
    std::size_t hit = 0;
    for (int c : want) {
        hit += got.count(c);
    }
    return static_cast<double>(hit) / static_cast<double>(want.size());
}

Outcome c6() {
    Outcome o;
    const auto& base = default_synth();
    o.check(base.spec.channels == 32 && base.spec.relevant_per_task == 4 && base.spec.samples == 200 &&
                base.spec.tasks == 3 && base.spec.noise_sigma == 0.0,
            "default spec differs from C=32, |S|=4, T=3, 200 samples, sigma=0");
    const auto clean = mi_top_sets(base.data, base.spec);
    std::string line = "sigma=0 precision:";
    for (std::size_t j = 0; j < 3; ++j) {
        const double p = precision(clean[j], base.spec.relevant[j]);
        line += fmt(" %.2f", p);
        o.check(p == 1.0, "task " + std::to_string(j) + " precision below 1 at sigma=0");
    }
    o.note(line);

    SynthSpec noisy = base.spec;
    for (std::size_t j = 0; j < 3; ++j) {
        o.check(std::abs(base.spec.signal_power(j) - 1.0) < 1e-12, "signal power is not 1");
    }
    noisy.noise_sigma = std::sqrt(0.1 * base.spec.signal_power(0));
    const auto d = generate_dataset(noisy);
    const auto sets = mi_top_sets(d, noisy);
    line = fmt("sigma=%.4f precision:", noisy.noise_sigma);
    for (std::size_t j = 0; j < 3; ++j) {
        const double p = precision(sets[j], noisy.relevant[j]);
        line += fmt(" %.2f", p);
        o.check(p >= 0.75, "task " + std::to_string(j) + " precision below 0.75 with noise");
    }
    o.note(line);
    return o;
}

Outcome c7() {
    Outcome o;
    const std::vector<double> f{1.0, 0.9375, 0.875, 0.75, 0.5};
    const std::vector<std::size_t> want{256, 240, 224, 192, 128};
    std::string line = "C' =";
    Tensor t(256, 2, 2);
    std::vector<int> order(256);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        SelectionPlan plan;
        plan.ordering = order;
        plan.keep_count = SelectionPlan::keep_count_for(f[i], 256);
        line += " " + std::to_string(plan.keep_count);
        o.check(plan.keep_count == want[i], fmt("fraction %g", f[i]));
        o.check(hard_select(t, plan).selected.channels == want[i], fmt("hard_select at fraction %g", f[i]));
    }
    o.note(line);
    return o;
}

Outcome c8() {
    Outcome o;
    const auto& base = default_synth();
    const auto order = norm_importance(base.data, 2).ordering;
    double worst_base = 0.0;
    for (std::size_t s = 0; s < 5; ++s) {
        const Tensor& t = base.data.features[s];
        for (double frac : {0.5, 0.75}) {
            SelectionPlan plan;
            plan.ordering = order;
            plan.mode = SelectionMode::soft;
            plan.keep_count = SelectionPlan::keep_count_for(frac, t.channels);
            std::size_t prev_bytes = SIZE_MAX;
            double prev_mse = -1.0;
            std::string line = "sample " + std::to_string(s) + fmt(" keep %g:", frac);
            for (int qp : {10, 20, 30, 40}) {
                plan.qp = qp;
                const auto p = soft_select(t, plan);
                const std::size_t bytes = serialize_payload(p).size();
                const Tensor r = reconstruct(p);
                double mse = 0.0;
                for (std::size_t i = 0; i < t.size(); ++i) {
                    const double e = double(t.values[i]) - r.values[i];
                    mse += e * e;
                }
                mse /= static_cast<double>(t.size());
                line += " qp" + std::to_string(qp) + " " + std::to_string(bytes) + "B/" + fmt("%.2e", mse);
                o.check(bytes < prev_bytes, line + " bytes not strictly decreasing");
                o.check(mse >= prev_mse, line + " MSE decreased");
                prev_bytes = bytes;
                prev_mse = mse;
                for (std::size_t i = 0; i < plan.keep_count; ++i) {
                    const int id = order[i];
                    const auto a = t.channel(t.index_of(id));
                    const auto b = r.channel(r.index_of(id));
                    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
                    const double bound = (double(*hi) - *lo) / 510.0;
                    // dequantized values are rounded to float
                    const double slack = 2.0 * FLT_EPSILON * std::max(std::abs(*lo), std::abs(*hi));
                    for (std::size_t k = 0; k < a.size(); ++k) {
                        const double e = std::abs(double(a[k]) - b[k]);
                        worst_base = std::max(worst_base, e / bound);
                        o.check(e <= bound + slack, "base channel error above (max-min)/510");
                    }
                }
            }
            if (s == 0) {
                o.note(line);
            }
        }
    }
    o.note(fmt("max base error / ((max-min)/510): %.6f", worst_base));
    return o;
}

Outcome c9() {
    Outcome o;
    const auto& base = default_synth();
    const ProxyEvaluator eval(base.spec);
    const auto& features = base.data.features;
    const std::size_t keep = SelectionPlan::keep_count_for(0.5, base.spec.channels);
    const auto l2 = norm_importance(base.data, 2);
    for (std::size_t j = 0; j < base.spec.tasks; ++j) {
        const double full = eval(features, j);
        const auto mi = mi_importance(base.data, static_cast<int>(j), MIImportanceOptions::for_dataset(base.data));
        for (const auto* table : {&mi, &l2}) {
            SelectionPlan plan;
            plan.ordering = table->ordering;
            plan.keep_count = keep;
            plan.mode = SelectionMode::soft;
            plan.qp = 10;
            std::vector<Tensor> soft(features.size()), hard(features.size());
            for (std::size_t s = 0; s < features.size(); ++s) {
                const auto p = soft_select(features[s], plan);
                soft[s] = reconstruct(p);
                hard[s] = reconstruct(p, ReconstructOptions{true, nullptr}); // 8-bit base only
            }
            plan.mode = SelectionMode::hard;
            const double a_soft = eval(soft, j), a_hard = eval(hard, j);
            const double a_float = eval(apply_plan(features, plan), j);
            const std::string label = "task " + std::to_string(j) + " " + to_string(table->criterion);
            o.note(label + fmt2(": soft qp10 %.2f dB, hard %.2f dB", a_soft, a_hard) +
                   fmt2(" (unquantized hard %.2f dB), full %.2f dB", a_float, full));
            o.check(a_soft >= a_hard, label + " soft below hard");
            o.check(a_soft <= full + 0.1, label + " soft above full + 0.1 dB");
        }
    }
    return o;
}

Outcome c10() {
    Outcome o;
    o.check(std::abs(task_distortion(100, 90) - 0.1) <= 1e-12, "D(100, 90) != 0.1");
    o.check(task_distortion(42, 42) == 0.0, "D(a, a) != 0");
    o.check(std::abs(task_distortion(30, 33) - 0.1) <= 1e-12, "D(30, 33) != 0.1");
    const std::vector<double> d{0.1, 0.2, 0.3};
    o.check(std::abs(total_distortion(d, std::vector<double>{0.5, 0.3, 0.2}) - 0.17) <= 1e-12, "total != 0.17");
    o.check(total_distortion(d, std::vector<double>{1, 0, 0}) == 0.1, "vertex total != D1");
    o.check(std::abs(total_distortion(std::vector<double>{0.4, 0.4, 0.4}, std::vector<double>{0.2, 0.3, 0.5}) - 0.4) <=
                1e-12,
            "equal distortions");

    // benchmark records at 50% hard selection
    SynthSpec spec;
    spec.samples = 60;
    BenchmarkConfig cfg;
    cfg.keep_fractions = {0.5};
    cfg.qps = {30};
    const auto bench = run_benchmark(spec, cfg);
    const std::vector<std::string> crit{"mi", "l1", "l2", "gm"};
    const SelectionKey key{16, -1};
    const auto map2 = sweep_simplex(bench.records, crit, key, 2);
    o.check(map2.points.size() == 6, "r=2 grid does not have 6 points");
    for (std::size_t r : {2u, 10u, 100u}) {
        const auto map = sweep_simplex(bench.records, crit, key, r);
        double sum = 0.0;
        for (const auto& [label, f] : map.win_fractions) {
            sum += f;
        }
        o.check(std::abs(sum - 1.0) <= 1e-12, "win fractions do not sum to 1 at r=" + std::to_string(r));
        for (const auto& p : map.points) {
            for (std::size_t j = 0; j < 3; ++j) {
                if (p.grid[j] != r) {
                    continue;
                }
                double best = INFINITY;
                std::vector<std::string> argmin;
                for (const auto& c : crit) {
                    const double dj = task_distortion(bench.records[j], c, key);
                    if (dj < best - kTieTolerance) {
                        best = dj;
                        argmin = {c};
                    } else if (std::abs(dj - best) <= kTieTolerance) {
                        argmin.push_back(c);
                    }
                }
                const std::string want = argmin.size() == 1 ? argmin[0] : kTieLabel;
                o.check(p.winner == want, "vertex " + std::to_string(j) + " winner " + p.winner + ", expected " + want);
            }
        }
        if (r == 100) {
            std::string line = "r=100 win fractions:";
            for (const auto& [label, f] : map.win_fractions) {
                line += " " + label + fmt(" %.3f", f);
            }
            o.note(line);
        }
    }
    // linearity on random weight pairs
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> w1(3), w2(3), mix(3);
        double s1 = 0, s2 = 0;
        for (int j = 0; j < 3; ++j) {
            s1 += (w1[j] = rng.uniform());
            s2 += (w2[j] = rng.uniform());
        }
        const double a = rng.uniform();
        for (int j = 0; j < 3; ++j) {
            w1[j] /= s1;
            w2[j] /= s2;
            mix[j] = a * w1[j] + (1 - a) * w2[j];
        }
        o.check(std::abs(total_distortion(d, mix) - (a * total_distortion(d, w1) + (1 - a) * total_distortion(d, w2))) <=
                    1e-12,
                "total distortion not linear in the weights");
    }
    return o;
}

// ---- CLI determinism ----

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw io_error("cannot read " + p.string());
    }
    return {std::istreambuf_iterator<char>(in), {}};
}

int shell(const std::string& cmd, const fs::path& log) {
    const int rc = std::system((cmd + " >" + log.string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome c11(const std::string& cli, const fs::path& work) {
    Outcome o;
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string w = work.string();
    const std::string data = w + "/data/manifest.json";
    const std::string feat = w + "/data/features/s00003.ften";
    const std::vector<std::pair<std::string, std::string>> runs{
        {"synth", "synth --channels 8 --height 8 --width 16 --tasks 2 --relevant 2 --samples 16 --noise 0.05"},
        {"data", "synth --channels 8 --height 8 --width 16 --tasks 2 --relevant 2 --samples 16"},
        {"bench", "synth --channels 8 --height 8 --width 16 --tasks 3 --relevant 2 --samples 16 --benchmark "
                  "--keeps 1,0.5 --qps 10,30"},
        {"gauss", "validate-gaussian --mode both --rhos 0,0.6,-0.9 --ks 2,8 --samples 20000 --repeats 2"},
        {"mi", "estimate-mi --manifest " + data + " --task 1"},
        {"rank_mi", "rank --criterion mi --task 0 --manifest " + data},
        {"rank_l1", "rank --criterion l1 --format json --manifest " + data},
        {"rank_l2", "rank --criterion l2 --manifest " + data},
        {"rank_gm", "rank --criterion gm --manifest " + data},
        {"hard_one", "select-hard --importance " + w + "/rank_mi/importance.json --input " + feat + " --keep 0.5"},
        {"hard_all", "select-hard --importance " + w + "/rank_l2/importance.json --manifest " + data +
                         " --keep-count 3"},
        {"soft_one", "select-soft --importance " + w + "/rank_mi/importance.json --input " + feat +
                         " --keep 0.5 --qp 20"},
        {"soft_all", "select-soft --importance " + w + "/rank_gm/importance.json --manifest " + data +
                         " --keep 0.75 --qp 35"},
        {"recon_one", "reconstruct --payload " + w + "/soft_one/payload.fssp"},
        {"recon_all", "reconstruct --payloads " + w + "/soft_all/payloads.json --drop-enhancement"},
        {"dist", "distortion --accuracy " + w + "/bench/accuracy.csv --keep-count 4 --qp 30 --weights 0.2,0.3,0.5"},
        {"sweep", "sweep-simplex --accuracy " + w + "/bench/accuracy.csv --keep-count 4 --resolution 20"},
        {"repro", "repro --quick"},
    };
    std::set<std::string> covered;
    for (const auto& [name, args] : runs) {
        const fs::path out = work / name;
        covered.insert(args.substr(0, args.find(' ')));
        if (shell(cli + " " + args + " --threads 1 --out " + out.string(), work / (name + ".log")) != 0) {
            o.check(false, name + ": command failed, see " + (work / (name + ".log")).string());
            continue;
        }
        const fs::path record = out / "run.json";
        if (shell(cli + " replay " + record.string() + " --threads 4", work / (name + "_replay.log")) != 0) {
            o.check(false, name + ": replay failed");
            continue;
        }
        const auto first = json::parse(slurp(record));
        const auto again = json::parse(slurp(out / "replay" / "run.json"));
        o.check(first.at("outputs") == again.at("outputs"), name + ": replay wrote a different file set");
        o.check(first.at("args") == again.at("args"), name + ": replay recorded different arguments");
        std::size_t files = 0;
        for (const auto& rel : first.at("outputs")) {
            const auto r = rel.get<std::string>();
            ++files;
            o.check(slurp(out / r) == slurp(out / "replay" / r), name + ": " + r + " differs after replay");
        }
        o.check(files > 0, name + ": no outputs recorded");
        o.note(name + ": " + std::to_string(files) + " files byte-identical");
    }
    for (const char* sub : {"validate-gaussian", "estimate-mi", "rank", "select-hard", "select-soft", "reconstruct",
                            "distortion", "sweep-simplex", "synth", "repro"}) {
        o.check(covered.count(sub) == 1, std::string("subcommand not exercised: ") + sub);
    }
    return o;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: %s <mifs CLI> <work dir>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = argv[2];

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Gaussian 1-D lower bound", c1},
        {"estimator stability over seeds", c2},
        {"Gaussian 2-D patching bound", c3},
        {"monotone in K", c4},
        {"scale-invariance contrast", c5},
        {"planted-relevance recovery", c6},
        {"hard-selection channel counts", c7},
        {"soft-selection rate-distortion", c8},
        {"soft closes the hard gap", c9},
        {"multi-objective algebra", c10},
        {"CLI replay determinism", [&] { return c11(cli, work); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("exception: ") + e.what());
        }
        for (const auto& n : o.notes) {
            std::printf("    %s\n", n.c_str());
        }
        std::printf("%s  criterion %zu: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

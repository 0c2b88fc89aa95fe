// mifs: command-line front end.
//
// Every subcommand writes its outputs into --out (or $MIFS_OUT_DIR) together
// with run.json, a provenance record from which `mifs replay` reruns it.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mifs/benchmark.hpp"
#include "mifs/codec.hpp"
#include "mifs/error.hpp"
#include "mifs/gaussian.hpp"
#include "mifs/importance.hpp"
#include "mifs/io_util.hpp"
#include "mifs/manifest.hpp"
#include "mifs/multiobjective.hpp"
#include "mifs/parallel.hpp"
#include "mifs/selection.hpp"
#include "mifs/synth.hpp"
#include "mifs/tensor_io.hpp"
#include "mifs/version.hpp"

using json = nlohmann::json;
using namespace mifs;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitIo = 4;
constexpr int kExitFormat = 5;

// A report: named columns, rows of JSON scalars. Written as CSV or as a JSON
// array of objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    void add(std::vector<json> row) { rows.push_back(std::move(row)); }
};

std::string csv_cell(const json& v) {
    if (v.is_null()) {
        return "";
    }
    if (v.is_number_integer()) {
        return format_int(v.get<long long>());
    }
    if (v.is_number_unsigned()) {
        return std::to_string(v.get<unsigned long long>());
    }
    if (v.is_number_float()) {
        return format_double(v.get<double>());
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") != std::string::npos) {
        std::string q = "\"";
        for (char c : s) {
            q += c;
            if (c == '"') {
                q += '"';
            }
        }
        return q + "\"";
    }
    return s;
}

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out += (i ? "," : "") + t.columns[i];
    }
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += (i ? "," : "") + csv_cell(row[i]);
        }
        out += "\n";
    }
    return out;
}

json to_json(const Table& t) {
    json arr = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            obj[t.columns[i]] = row[i];
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

class Context {
  public:
    Context(fs::path out, std::string format) : out_(std::move(out)), format_(std::move(format)) {
        if (format_ != "csv" && format_ != "json") {
            throw domain_error("--format must be csv or json, got '" + format_ + "'");
        }
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) {
            throw io_error("cannot create output directory " + out_.string() + ": " + ec.message());
        }
    }

    const fs::path& out() const { return out_; }
    const std::string& format() const { return format_; }
    const std::vector<std::string>& written() const { return written_; }

    Context sub(const std::string& dir) const { return Context(out_ / dir, format_); }

    void text(const std::string& name, const std::string& body) {
        atomic_write(out_ / name, body);
        note(name);
    }
    void bytes(const std::string& name, std::span<const std::uint8_t> body) {
        atomic_write(out_ / name, body);
        note(name);
    }
    void tensor(const std::string& name, const Tensor& t) {
        write_tensor(t, out_ / name);
        note(name);
    }
    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
    void report(const std::string& stem, const Table& t) {
        if (format_ == "csv") {
            text(stem + ".csv", to_csv(t));
        } else {
            json_file(stem + ".json", to_json(t));
        }
    }
    void adopt(const Context& child, const std::string& prefix) {
        for (const auto& n : child.written_) {
            note(prefix + "/" + n);
        }
    }

    // Records a file written by library code.
    void note(const std::string& name) {
        if (std::find(written_.begin(), written_.end(), name) == written_.end()) {
            written_.push_back(name);
        }
    }

  private:
    fs::path out_;
    std::string format_;
    std::vector<std::string> written_;
};

// ---- option structs ----

struct GaussianOpts {
    std::string mode = "both";
    std::vector<double> rhos{0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9};
    std::vector<std::size_t> ks{2, 4, 8, 16, 32};
    std::size_t samples = 400000;
    std::size_t repeats = 5;
    std::size_t bins = 32;
    std::uint64_t seed = 20230401;
    std::string units = "nats";
};

struct MIOpts {
    std::string manifest;
    int task = -1;
    std::size_t n = 0, m = 0; // 0: take from the manifest
    std::size_t k = 8, bins = 8;
    std::uint64_t seed = 7;
    bool exact = false;

    MIImportanceOptions resolve(const Dataset& d) const {
        auto o = MIImportanceOptions::for_dataset(d);
        if (n) {
            o.feature_side = n;
        }
        if (m) {
            o.output_side = m;
        }
        o.k = k;
        o.bins = bins;
        o.seed = seed;
        o.exact_symbols = exact;
        return o;
    }
};

struct RankOpts {
    MIOpts mi;
    std::string criterion = "mi";
    double gm_tol = 1e-9;
    std::size_t gm_iters = 1000;
};

struct SelectOpts {
    std::string importance;
    std::string input;
    std::string manifest;
    std::optional<double> keep;
    std::optional<std::size_t> keep_count;
    int qp = 30;
    std::string codec_cmd;
    std::string codec_decode_cmd;
};

struct ReconOpts {
    std::string payload;
    std::string payloads;
    bool drop_enhancement = false;
    std::string codec_decode_cmd;
};

struct DistOpts {
    std::string accuracy;
    std::vector<std::string> criteria;
    long long keep_count = 0;
    int qp = -1;
    std::vector<double> weights;
    std::size_t resolution = 100;
};

struct SynthOpts {
    std::string spec;
    std::optional<std::size_t> channels, height, width, tasks, relevant, samples, n, m;
    std::optional<double> noise, noise_fraction, corr;
    std::optional<std::uint64_t> seed;
    bool benchmark = false;
    std::vector<int> qps{10, 20, 30, 40};
    std::vector<double> keeps{1.0, 0.9375, 0.875, 0.75, 0.5};
};

struct ReproOpts {
    bool quick = false;
    std::uint64_t seed = 20230401;
};

// ---- helpers ----

double to_units(double nats, const std::string& units) { return units == "bits" ? nats / std::log(2.0) : nats; }

// Nats columns always; bits columns added with --units bits.
Table records_table(const std::vector<MIEstimateRecord>& recs, const std::string& units) {
    Table t{{"rho", "K", "repeat", "estimate_nats", "true_1d_nats", "true_2d_nats", "mode", "samples"}, {}};
    const bool bits = units == "bits";
    if (bits) {
        t.columns.insert(t.columns.end(), {"estimate_bits", "true_1d_bits", "true_2d_bits"});
    }
    auto opt = [&](const std::optional<double>& v, const std::string& u) {
        return v ? json(to_units(*v, u)) : json(nullptr);
    };
    for (const auto& r : recs) {
        std::vector<json> row{r.rho, r.k, r.repeat, r.estimate_nats, r.true_mi_nats, opt(r.true_full_nats, "nats"),
                              r.mode, r.sample_count};
        if (bits) {
            row.insert(row.end(), {to_units(r.estimate_nats, units), to_units(r.true_mi_nats, units),
                                   opt(r.true_full_nats, units)});
        }
        t.add(row);
    }
    return t;
}

// Mean and population variance of repeats per (rho, K).
Table summary_table(const std::vector<MIEstimateRecord>& recs, const std::string& units) {
    Table t{{"mode", "rho", "K", "mean", "variance", "min", "max", "true_mi", "true_full", "units"}, {}};
    std::size_t i = 0;
    while (i < recs.size()) {
        std::size_t j = i;
        while (j < recs.size() && recs[j].rho == recs[i].rho && recs[j].k == recs[i].k && recs[j].mode == recs[i].mode) {
            ++j;
        }
        double mean = 0.0, lo = INFINITY, hi = -INFINITY;
        for (std::size_t q = i; q < j; ++q) {
            mean += recs[q].estimate_nats;
            lo = std::min(lo, recs[q].estimate_nats);
            hi = std::max(hi, recs[q].estimate_nats);
        }
        mean /= static_cast<double>(j - i);
        double var = 0.0;
        for (std::size_t q = i; q < j; ++q) {
            var += (recs[q].estimate_nats - mean) * (recs[q].estimate_nats - mean);
        }
        var /= static_cast<double>(j - i);
        const double scale = units == "bits" ? 1.0 / std::log(2.0) : 1.0;
        const auto& r = recs[i];
        t.add({r.mode, r.rho, r.k, mean * scale, var * scale * scale, lo * scale, hi * scale,
               to_units(r.true_mi_nats, units),
               r.true_full_nats ? json(to_units(*r.true_full_nats, units)) : json(nullptr), units});
        i = j;
    }
    return t;
}

void run_validate(Context& ctx, const GaussianOpts& o) {
    if (o.mode != "1d" && o.mode != "2d" && o.mode != "both") {
        throw domain_error("--mode must be 1d, 2d or both");
    }
    if (o.units != "nats" && o.units != "bits") {
        throw domain_error("--units must be nats or bits");
    }
    ValidationConfig cfg;
    cfg.rhos = o.rhos;
    cfg.ks = o.ks;
    cfg.sample_count = o.samples;
    cfg.repeats = o.repeats;
    cfg.bins = o.bins;
    cfg.seed = o.seed;
    if (o.mode != "2d") {
        const auto recs = run_validation_1d(cfg);
        ctx.report("gaussian_1d", records_table(recs, o.units));
        ctx.report("gaussian_1d_summary", summary_table(recs, o.units));
    }
    if (o.mode != "1d") {
        const auto recs = run_validation_2d(cfg);
        ctx.report("gaussian_2d", records_table(recs, o.units));
        ctx.report("gaussian_2d_summary", summary_table(recs, o.units));
    }
}

void run_estimate(Context& ctx, const MIOpts& o, const std::vector<int>& channels) {
    const Dataset d = load_dataset(fs::path(o.manifest));
    const auto table = mi_importance(d, o.task, o.resolve(d));
    Table t{{"task_id", "channel_id", "mi_nats", "mi_bits"}, {}};
    for (std::size_t i = 0; i < table.channel_ids.size(); ++i) {
        const int id = table.channel_ids[i];
        if (!channels.empty() && std::find(channels.begin(), channels.end(), id) == channels.end()) {
            continue;
        }
        t.add({o.task, id, table.scores[i], table.scores[i] / std::log(2.0)});
    }
    for (int c : channels) {
        table.score_of(c); // unknown ids raise
    }
    ctx.report("mi", t);
}

void run_rank(Context& ctx, const RankOpts& o) {
    const Criterion c = criterion_from_string(o.criterion);
    const Dataset d = load_dataset(fs::path(o.mi.manifest));
    ImportanceTable table;
    switch (c) {
    case Criterion::mi:
        if (o.mi.task < 0) {
            throw domain_error("--task is required for the mi criterion");
        }
        table = mi_importance(d, o.mi.task, o.mi.resolve(d));
        break;
    case Criterion::l1:
    case Criterion::l2:
        table = norm_importance(d, c == Criterion::l1 ? 1 : 2);
        break;
    case Criterion::gm:
        table = gm_importance(d, o.gm_tol, o.gm_iters);
        break;
    }
    ctx.json_file("importance.json", mifs::to_json(table));
    if (ctx.format() == "csv") {
        ctx.text("importance.csv", importance_csv(table));
    }
}

SelectionPlan make_plan(const SelectOpts& o, const ImportanceTable& table, SelectionMode mode) {
    SelectionPlan plan;
    plan.ordering = table.ordering;
    plan.mode = mode;
    if (o.keep.has_value() == o.keep_count.has_value()) {
        throw domain_error("exactly one of --keep and --keep-count is required");
    }
    plan.keep_count = o.keep ? SelectionPlan::keep_count_for(*o.keep, table.ordering.size()) : *o.keep_count;
    plan.qp = o.qp;
    if (!o.codec_cmd.empty()) {
        plan.codec = CodecKind::external;
        plan.external = {o.codec_cmd, o.codec_decode_cmd};
    }
    return plan;
}

std::string join_ids(std::span<const int> ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        s += (i ? " " : "") + std::to_string(ids[i]);
    }
    return s;
}

// Manifest entries of derived datasets point at the original outputs by
// absolute path.
DatasetManifest derived_manifest(const DatasetManifest& src, const fs::path& root) {
    DatasetManifest m;
    m.root = root;
    m.patch = src.patch;
    m.tasks = src.tasks;
    return m;
}

SampleEntry derived_entry(const DatasetManifest& src, const SampleEntry& e, std::string features) {
    SampleEntry out;
    out.id = e.id;
    out.features = std::move(features);
    for (const auto& [task, path] : e.outputs) {
        out.outputs[task] = fs::absolute(src.resolve(path)).lexically_normal().string();
    }
    return out;
}

void check_input_choice(const std::string& input, const std::string& manifest) {
    if (input.empty() == manifest.empty()) {
        throw domain_error("exactly one of --input and --manifest is required");
    }
}

void run_select_hard(Context& ctx, const SelectOpts& o) {
    check_input_choice(o.input, o.manifest);
    const auto table = load_importance(o.importance);
    const auto plan = make_plan(o, table, SelectionMode::hard);
    Table rep{{"sample", "channels", "kept", "kept_ids"}, {}};
    auto one = [&](const Tensor& t) {
        const auto sel = hard_select(t, plan);
        return sel;
    };
    if (!o.input.empty()) {
        const auto sel = one(read_tensor(o.input));
        ctx.tensor("selected.ften", sel.selected);
        ctx.tensor("reconstructed.ften", sel.reconstruction);
        rep.add({"input", sel.reconstruction.channels, sel.selected.channels, join_ids(sel.selected.channel_ids)});
    } else {
        const auto src = load_manifest(o.manifest);
        auto dst = derived_manifest(src, ctx.out());
        for (const auto& e : src.samples) {
            const auto sel = one(read_tensor(src.resolve(e.features)));
            const std::string name = "features/" + e.id + ".ften";
            ctx.tensor(name, sel.reconstruction);
            dst.samples.push_back(derived_entry(src, e, name));
            rep.add({e.id, sel.reconstruction.channels, sel.selected.channels, join_ids(sel.selected.channel_ids)});
        }
        ctx.json_file("manifest.json", manifest_to_json(dst));
    }
    ctx.report("selection", rep);
}

void run_select_soft(Context& ctx, const SelectOpts& o) {
    check_input_choice(o.input, o.manifest);
    const auto table = load_importance(o.importance);
    const auto plan = make_plan(o, table, SelectionMode::soft);
    Table rep{{"sample", "channels", "kept", "qp", "base_bytes", "enhancement_bytes", "payload_bytes"}, {}};
    auto one = [&](const std::string& id, const Tensor& t, const std::string& name) {
        const auto p = soft_select(t, plan);
        const auto bytes = serialize_payload(p);
        ctx.bytes(name, bytes);
        rep.add({id, p.channels, p.base.channels, p.qp, p.base_bytes(), p.enhancement_bytes(), bytes.size()});
    };
    if (!o.input.empty()) {
        one("input", read_tensor(o.input), "payload.fssp");
    } else {
        const auto src = load_manifest(o.manifest);
        auto dst = derived_manifest(src, ctx.out());
        for (const auto& e : src.samples) {
            const std::string name = "payloads/" + e.id + ".fssp";
            one(e.id, read_tensor(src.resolve(e.features)), name);
            dst.samples.push_back(derived_entry(src, e, name));
        }
        json j = manifest_to_json(dst);
        j["format"] = "mifs-payloads";
        ctx.json_file("payloads.json", j);
    }
    ctx.report("payload", rep);
}

void run_reconstruct(Context& ctx, const ReconOpts& o) {
    if (o.payload.empty() == o.payloads.empty()) {
        throw domain_error("exactly one of --payload and --payloads is required");
    }
    ExternalCodec ext{"", o.codec_decode_cmd};
    ReconstructOptions ropt;
    ropt.drop_enhancement = o.drop_enhancement;
    ropt.external = o.codec_decode_cmd.empty() ? nullptr : &ext;
    Table rep{{"sample", "channels", "height", "width", "enhancement_dropped"}, {}};
    auto one = [&](const fs::path& path) {
        const auto bytes = read_file(path);
        try {
            return reconstruct(parse_payload(bytes), ropt);
        } catch (const format_error& e) {
            throw e.with_context(path.string());
        }
    };
    if (!o.payload.empty()) {
        const auto t = one(o.payload);
        ctx.tensor("reconstructed.ften", t);
        rep.add({"input", t.channels, t.height, t.width, o.drop_enhancement});
    } else {
        json j;
        try {
            j = json::parse(read_text(o.payloads));
        } catch (const json::exception& e) {
            throw format_error(o.payloads + ": " + e.what(), 0);
        }
        if (j.value("format", "") != "mifs-payloads") {
            throw format_error(o.payloads + ": not a payload list", 0);
        }
        j["format"] = kManifestFormat;
        const auto src = manifest_from_json(j, fs::path(o.payloads).parent_path());
        auto dst = derived_manifest(src, ctx.out());
        for (const auto& e : src.samples) {
            const auto t = one(src.resolve(e.features));
            const std::string name = "features/" + e.id + ".ften";
            ctx.tensor(name, t);
            dst.samples.push_back(derived_entry(src, e, name));
            rep.add({e.id, t.channels, t.height, t.width, o.drop_enhancement});
        }
        ctx.json_file("manifest.json", manifest_to_json(dst));
    }
    ctx.report("reconstruction", rep);
}

std::vector<AccuracyRecord> load_accuracy(const std::string& path) {
    const auto recs = parse_accuracy_csv(read_text(path));
    if (recs.empty()) {
        throw domain_error(path + ": no accuracy records");
    }
    return recs;
}

std::vector<std::string> criteria_or_all(const std::vector<std::string>& given, const std::vector<AccuracyRecord>& recs) {
    if (!given.empty()) {
        return given;
    }
    std::vector<std::string> all;
    for (const auto& r : recs) {
        for (const auto& [c, _] : r.selected) {
            if (std::find(all.begin(), all.end(), c) == all.end()) {
                all.push_back(c);
            }
        }
    }
    std::sort(all.begin(), all.end());
    return all;
}

void run_distortion(Context& ctx, const DistOpts& o) {
    const auto recs = load_accuracy(o.accuracy);
    const auto criteria = criteria_or_all(o.criteria, recs);
    const SelectionKey key{o.keep_count, o.qp < 0 ? -1 : o.qp};
    Table rep{{"task_id", "metric", "criterion", "keep_count", "qp", "full", "selected", "distortion"}, {}};
    std::map<std::string, std::vector<double>> per;
    for (const auto& c : criteria) {
        for (const auto& r : recs) {
            const double d = task_distortion(r, c, key);
            per[c].push_back(d);
            rep.add({r.task_id, r.metric, c, key.keep_count, key.qp < 0 ? json(nullptr) : json(key.qp),
                     r.full_accuracy(), r.accuracy(c, key), d});
        }
    }
    ctx.report("distortion", rep);
    if (!o.weights.empty()) {
        if (o.weights.size() != recs.size()) {
            throw domain_error("--weights needs one weight per task (" + std::to_string(recs.size()) + ")");
        }
        Table tot{{"criterion", "total_distortion"}, {}};
        for (const auto& c : criteria) {
            tot.add({c, total_distortion(per[c], o.weights)});
        }
        ctx.report("total_distortion", tot);
    }
}

void run_sweep(Context& ctx, const DistOpts& o) {
    const auto recs = load_accuracy(o.accuracy);
    const auto criteria = criteria_or_all(o.criteria, recs);
    const SelectionKey key{o.keep_count, o.qp < 0 ? -1 : o.qp};
    const auto map = sweep_simplex(recs, criteria, key, o.resolution);
    Table pts;
    for (int t : map.task_ids) {
        pts.columns.push_back("g" + std::to_string(t));
    }
    for (int t : map.task_ids) {
        pts.columns.push_back("w" + std::to_string(t));
    }
    pts.columns.insert(pts.columns.end(), {"x", "y"});
    for (const auto& c : map.criteria) {
        pts.columns.push_back("total_" + c);
    }
    pts.columns.push_back("winner");
    for (const auto& p : map.points) {
        std::vector<json> row;
        for (auto g : p.grid) {
            row.emplace_back(g);
        }
        for (double w : p.weights) {
            row.emplace_back(w);
        }
        row.emplace_back(p.x);
        row.emplace_back(p.y);
        for (double v : p.totals) {
            row.emplace_back(v);
        }
        row.emplace_back(p.winner);
        pts.add(std::move(row));
    }
    ctx.report("simplex", pts);
    Table sum{{"label", "win_fraction"}, {}};
    for (const auto& [label, f] : map.win_fractions) {
        sum.add({label, f});
    }
    ctx.report("simplex_summary", sum);
}

SynthSpec synth_spec(const SynthOpts& o) {
    SynthSpec s = o.spec.empty() ? SynthSpec{} : [&] {
        try {
            return synth_spec_from_json(json::parse(read_text(o.spec)));
        } catch (const json::exception& e) {
            throw format_error(o.spec + ": " + e.what(), 0);
        }
    }();
    if (o.channels) s.channels = *o.channels;
    if (o.height) s.height = *o.height;
    if (o.width) s.width = *o.width;
    if (o.tasks) s.tasks = *o.tasks;
    if (o.relevant) s.relevant_per_task = *o.relevant;
    if (o.samples) s.samples = *o.samples;
    if (o.n) s.feature_side = *o.n;
    if (o.m) s.output_side = *o.m;
    if (o.corr) s.correlation_length = *o.corr;
    if (o.seed) s.seed = *o.seed;
    if (o.noise && o.noise_fraction) {
        throw domain_error("--noise and --noise-fraction are mutually exclusive");
    }
    if (o.noise) s.noise_sigma = *o.noise;
    if (o.noise_fraction) {
        if (!(*o.noise_fraction >= 0.0)) {
            throw domain_error("--noise-fraction must be non-negative");
        }
        // sigma^2 = fraction of the mean clean-output power over tasks
        const auto r = s.resolved();
        double p = 0.0;
        for (std::size_t j = 0; j < r.tasks; ++j) {
            p += r.signal_power(j);
        }
        s.noise_sigma = std::sqrt(*o.noise_fraction * p / static_cast<double>(r.tasks));
    }
    return s.resolved();
}

Table accuracy_table(const std::vector<AccuracyRecord>& recs) {
    Table t{{"task_id", "metric", "direction", "criterion", "keep_count", "qp", "accuracy"}, {}};
    for (const auto& r : recs) {
        if (r.full) {
            t.add({r.task_id, r.metric, to_string(r.direction), "full", nullptr, nullptr, *r.full});
        }
        for (const auto& [c, by_key] : r.selected) {
            for (const auto& [k, a] : by_key) {
                t.add({r.task_id, r.metric, to_string(r.direction), c, k.keep_count,
                       k.qp < 0 ? json(nullptr) : json(k.qp), a});
            }
        }
    }
    return t;
}

void write_benchmark(Context& ctx, const SynthSpec& spec, const BenchmarkConfig& cfg) {
    const auto res = run_benchmark(spec, cfg);
    ctx.text("accuracy.csv", accuracy_csv(res.records));
    if (ctx.format() == "json") {
        ctx.json_file("accuracy.json", to_json(accuracy_table(res.records)));
    }
    for (const auto& [name, tabs] : res.tables) {
        for (const auto& t : tabs) {
            const std::string stem = "importance_" + name + (t.task_id ? "_t" + std::to_string(*t.task_id) : "");
            ctx.json_file(stem + ".json", mifs::to_json(t));
        }
    }
    // Planted-relevance precision of the top-|S_j| set per task and criterion.
    Table prec{{"task_id", "criterion", "relevant", "top", "precision"}, {}};
    for (std::size_t j = 0; j < spec.tasks; ++j) {
        const auto& rel = spec.relevant[j];
        for (const auto& [name, tabs] : res.tables) {
            const auto& t = tabs.size() == 1 ? tabs[0] : tabs[j];
            const auto top = t.top(rel.size());
            std::size_t hit = 0;
            for (int c : top) {
                hit += std::find(rel.begin(), rel.end(), c) != rel.end();
            }
            prec.add({j, name, join_ids(rel), join_ids(top),
                      static_cast<double>(hit) / static_cast<double>(rel.size())});
        }
    }
    ctx.report("recovery", prec);
}

void run_synth(Context& ctx, const SynthOpts& o) {
    const SynthSpec spec = synth_spec(o);
    const auto m = generate(spec, ctx.out());
    for (const auto& e : m.samples) {
        ctx.note(e.features);
        for (const auto& [task, path] : e.outputs) {
            ctx.note(path);
        }
    }
    ctx.note("synth_spec.json");
    ctx.note("manifest.json");
    if (o.benchmark) {
        BenchmarkConfig cfg;
        cfg.qps = o.qps;
        cfg.keep_fractions = o.keeps;
        write_benchmark(ctx, spec, cfg);
    }
}

void run_repro(Context& ctx, const ReproOpts& o) {
    GaussianOpts g;
    g.seed = o.seed;
    if (o.quick) {
        g.samples = 40000;
        g.repeats = 2;
    }
    {
        Context sub = ctx.sub("gaussian");
        run_validate(sub, g);
        ctx.adopt(sub, "gaussian");
    }
    for (const auto& [dir, fraction] : std::vector<std::pair<std::string, double>>{{"synth", 0.0}, {"synth_noise10", 0.1}}) {
        Context sub = ctx.sub(dir);
        SynthOpts so;
        so.noise_fraction = fraction;
        if (o.quick) {
            so.samples = 60;
        }
        const SynthSpec spec = synth_spec(so);
        sub.json_file("synth_spec.json", to_json(spec));
        write_benchmark(sub, spec, BenchmarkConfig{});
        const auto recs = parse_accuracy_csv(read_text(sub.out() / "accuracy.csv"));
        DistOpts d;
        d.accuracy = (sub.out() / "accuracy.csv").string();
        d.criteria = {"gm", "l1", "l2", "mi"};
        d.keep_count = static_cast<long long>(SelectionPlan::keep_count_for(0.5, spec.channels));
        {
            Context s2 = sub.sub("sweep_hard50");
            run_sweep(s2, d);
            sub.adopt(s2, "sweep_hard50");
        }
        d.qp = 30;
        {
            Context s2 = sub.sub("sweep_soft50_qp30");
            run_sweep(s2, d);
            sub.adopt(s2, "sweep_soft50_qp30");
        }
        ctx.adopt(sub, dir);
    }
}

// ---- argument plumbing ----

struct Global {
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
};

// Pulls --out and --threads out of argv; they never enter the provenance
// record so replays may redirect them.
std::vector<std::string> strip_global(std::vector<std::string> args, Global& g) {
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        auto take = [&](const std::string& flag) -> std::optional<std::string> {
            if (a == flag) {
                if (i + 1 >= args.size()) {
                    throw CLI::ArgumentMismatch(flag + " needs a value");
                }
                return args[++i];
            }
            if (a.rfind(flag + "=", 0) == 0) {
                return a.substr(flag.size() + 1);
            }
            return std::nullopt;
        };
        if (auto v = take("--out")) {
            g.out = *v;
        } else if (auto v2 = take("--threads")) {
            try {
                const long long n = parse_int(*v2, "--threads");
                if (n < 1) {
                    throw domain_error("");
                }
                g.threads = static_cast<std::size_t>(n);
            } catch (const error&) {
                throw CLI::ValidationError("--threads", "must be a positive integer");
            }
        } else {
            rest.push_back(a);
        }
    }
    return rest;
}

struct Parsed {
    std::string subcommand;
    json config;
    std::function<void(Context&)> action;
};

json option_config(const CLI::App* sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_name(false, true);
        if (name.empty() || name == "--help" || name == "-h") {
            continue;
        }
        const std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (opt->count() > 0) {
            const auto& r = opt->results();
            if (opt->get_type_size() == 0) {
                cfg[key] = true;
            } else if (r.size() == 1) {
                cfg[key] = r.front();
            } else {
                cfg[key] = r;
            }
        } else if (!opt->get_default_str().empty()) {
            cfg[key] = opt->get_default_str();
        }
    }
    return cfg;
}

void add_format(CLI::App* sub, std::string& format) {
    sub->add_option("--format", format, "report format: csv or json")->capture_default_str();
}

struct AllOpts {
    GaussianOpts gauss;
    MIOpts mi;
    std::vector<int> mi_channels;
    RankOpts rank;
    SelectOpts hard, soft;
    ReconOpts recon;
    DistOpts dist, sweep;
    SynthOpts synth;
    ReproOpts repro;
    std::string format = "csv";
    std::string replay_path;
};

void add_mi_options(CLI::App* sub, MIOpts& o) {
    sub->add_option("--manifest", o.manifest, "dataset manifest (JSON)")->required();
    sub->add_option("-N,--feature-side", o.n, "feature patch side (default: manifest)");
    sub->add_option("-M,--output-side", o.m, "output patch side (default: manifest)");
    sub->add_option("-K,--clusters", o.k, "k-means clusters")->capture_default_str();
    sub->add_option("-B,--bins", o.bins, "bins per patch dimension")->capture_default_str();
    sub->add_option("--seed", o.seed, "k-means seed")->capture_default_str();
    sub->add_flag("--exact-symbols", o.exact, "count exact bin tuples instead of 64-bit hashes");
}

void add_select_options(CLI::App* sub, SelectOpts& o, bool soft) {
    sub->add_option("--importance", o.importance, "importance table (JSON from `rank`)")->required();
    sub->add_option("--input", o.input, "single feature tensor (FTEN)");
    sub->add_option("--manifest", o.manifest, "dataset manifest; every sample is processed");
    sub->add_option("--keep", o.keep, "fraction of channels kept, in (0, 1]");
    sub->add_option("--keep-count", o.keep_count, "number of channels kept");
    if (soft) {
        sub->add_option("--qp", o.qp, "enhancement quantization parameter, 0..51")->capture_default_str();
        sub->add_option("--codec-cmd", o.codec_cmd,
                        "external encoder template with {input} {output} {width} {height} {qp}");
        sub->add_option("--codec-decode-cmd", o.codec_decode_cmd, "external decoder template");
    }
}

void add_dist_options(CLI::App* sub, DistOpts& o) {
    sub->add_option("--accuracy", o.accuracy, "accuracy CSV")->required();
    sub->add_option("--criteria", o.criteria, "criteria to compare (default: all in the CSV)")->delimiter(',');
    sub->add_option("--keep-count", o.keep_count, "operating point: channels kept")->required();
    sub->add_option("--qp", o.qp, "operating point: soft-selection qp (omit for hard selection)");
}

std::unique_ptr<CLI::App> build(AllOpts& a, Parsed& p) {
    auto owner = std::make_unique<CLI::App>(
        "Feature-channel importance by mutual information, selection and compression", "mifs");
    CLI::App& app = *owner;
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.footer("Global options (any position): --out DIR (env MIFS_OUT_DIR, default mifs-out), "
               "--threads N (env MIFS_THREADS).");
    auto on = [&](CLI::App* sub, std::function<void(Context&)> fn) {
        add_format(sub, a.format);
        sub->callback([&p, sub, fn] {
            p.subcommand = sub->get_name();
            p.config = option_config(sub);
            p.action = fn;
        });
    };

    auto* g = app.add_subcommand("validate-gaussian", "lower-bound validation on correlated Gaussians");
    g->add_option("--mode", a.gauss.mode, "1d, 2d or both")->capture_default_str();
    g->add_option("--rhos", a.gauss.rhos, "correlation grid")->delimiter(',');
    g->add_option("--ks", a.gauss.ks, "cluster counts")->delimiter(',');
    g->add_option("--samples", a.gauss.samples, "samples per rho")->capture_default_str();
    g->add_option("--repeats", a.gauss.repeats, "k-means seeds per (rho, K)")->capture_default_str();
    g->add_option("-B,--bins", a.gauss.bins, "bins for X")->capture_default_str();
    g->add_option("--seed", a.gauss.seed, "root seed")->capture_default_str();
    g->add_option("--units", a.gauss.units, "nats or bits")->capture_default_str();
    on(g, [&a](Context& c) { run_validate(c, a.gauss); });

    auto* e = app.add_subcommand("estimate-mi", "per-channel MI estimates for one task");
    add_mi_options(e, a.mi);
    e->add_option("--task", a.mi.task, "task id")->required();
    e->add_option("--channel", a.mi_channels, "restrict to channel ids")->delimiter(',');
    on(e, [&a](Context& c) { run_estimate(c, a.mi, a.mi_channels); });

    auto* r = app.add_subcommand("rank", "importance table for one criterion");
    add_mi_options(r, a.rank.mi);
    r->add_option("--criterion", a.rank.criterion, "mi, l1, l2 or gm")->capture_default_str();
    r->add_option("--task", a.rank.mi.task, "task id (mi only)");
    r->add_option("--gm-tol", a.rank.gm_tol, "Weiszfeld tolerance")->capture_default_str();
    r->add_option("--gm-max-iters", a.rank.gm_iters, "Weiszfeld iteration cap")->capture_default_str();
    on(r, [&a](Context& c) { run_rank(c, a.rank); });

    auto* h = app.add_subcommand("select-hard", "keep the top channels, zero the rest");
    add_select_options(h, a.hard, false);
    on(h, [&a](Context& c) { run_select_hard(c, a.hard); });

    auto* s = app.add_subcommand("select-soft", "8-bit base channels plus compressed enhancement");
    add_select_options(s, a.soft, true);
    on(s, [&a](Context& c) { run_select_soft(c, a.soft); });

    auto* rc = app.add_subcommand("reconstruct", "decode soft-selection payloads");
    rc->add_option("--payload", a.recon.payload, "single payload (FSSP)");
    rc->add_option("--payloads", a.recon.payloads, "payload list written by select-soft --manifest");
    rc->add_flag("--drop-enhancement", a.recon.drop_enhancement, "zero the enhancement channels");
    rc->add_option("--codec-decode-cmd", a.recon.codec_decode_cmd, "external decoder template");
    on(rc, [&a](Context& c) { run_reconstruct(c, a.recon); });

    auto* d = app.add_subcommand("distortion", "per-task and weighted distortion");
    add_dist_options(d, a.dist);
    d->add_option("--weights", a.dist.weights, "task weights summing to 1")->delimiter(',');
    on(d, [&a](Context& c) { run_distortion(c, a.dist); });

    auto* sw = app.add_subcommand("sweep-simplex", "winner map over the weight simplex");
    add_dist_options(sw, a.sweep);
    sw->add_option("--resolution", a.sweep.resolution, "grid divisions per edge")->capture_default_str();
    on(sw, [&a](Context& c) { run_sweep(c, a.sweep); });

    auto* sy = app.add_subcommand("synth", "synthetic dataset with planted relevance");
    sy->add_option("--spec", a.synth.spec, "spec JSON; flags override its fields");
    sy->add_option("--channels", a.synth.channels, "C (default 32)");
    sy->add_option("--height", a.synth.height, "H (default 16)");
    sy->add_option("--width", a.synth.width, "W (default 32)");
    sy->add_option("--tasks", a.synth.tasks, "T (default 3)");
    sy->add_option("--relevant", a.synth.relevant, "|S_j| (default 4)");
    sy->add_option("--samples", a.synth.samples, "sample count (default 200)");
    sy->add_option("-N,--feature-side", a.synth.n, "feature patch side (default 2)");
    sy->add_option("-M,--output-side", a.synth.m, "output patch side (default 2)");
    sy->add_option("--noise", a.synth.noise, "output noise std");
    sy->add_option("--noise-fraction", a.synth.noise_fraction, "output noise power as a fraction of signal power");
    sy->add_option("--correlation-length", a.synth.corr, "field smoothing std in pixels (default 2)");
    sy->add_option("--seed", a.synth.seed, "spec seed (default 2024)");
    sy->add_flag("--benchmark", a.synth.benchmark, "also rank, select and score; writes accuracy.csv");
    sy->add_option("--qps", a.synth.qps, "benchmark QPs")->delimiter(',');
    sy->add_option("--keeps", a.synth.keeps, "benchmark keep fractions")->delimiter(',');
    on(sy, [&a](Context& c) { run_synth(c, a.synth); });

    auto* rp = app.add_subcommand("repro", "Gaussian validation plus the synthetic benchmark and sweeps");
    rp->add_flag("--quick", a.repro.quick, "reduced sample counts");
    rp->add_option("--seed", a.repro.seed, "Gaussian root seed")->capture_default_str();
    on(rp, [&a](Context& c) { run_repro(c, a.repro); });

    auto* rep = app.add_subcommand("replay", "rerun a subcommand from its run.json (--out defaults to <dir>/replay)");
    rep->add_option("run_json", a.replay_path, "provenance record")->required();
    return owner;
}

int run(const std::vector<std::string>& raw, const Global& g_in, std::optional<fs::path> chdir_to) {
    Global g = g_in;
    const auto args = strip_global(raw, g);
    if (!g.out) {
        if (const char* env = std::getenv("MIFS_OUT_DIR"); env && *env) {
            g.out = env;
        }
    }
    if (!g.threads) {
        if (const char* env = std::getenv("MIFS_THREADS"); env && *env) {
            const long long n = parse_int(env, "MIFS_THREADS");
            if (n < 1) {
                throw domain_error("MIFS_THREADS must be positive");
            }
            g.threads = static_cast<std::size_t>(n);
        }
    }
    fs::path out = fs::absolute(g.out.value_or("mifs-out"));
    if (chdir_to) {
        fs::current_path(*chdir_to);
    }
    if (g.threads) {
        set_max_threads(*g.threads);
    }
    AllOpts opts;
    Parsed p;
    auto app = build(opts, p);
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app->parse(rev);
    } catch (const CLI::ParseError& e) {
        return app->exit(e) == 0 ? 0 : kExitUsage;
    }
    if (!p.action) {
        std::cerr << app->help();
        return kExitUsage;
    }
    Context ctx(out, opts.format);
    p.action(ctx);
    json prov;
    prov["tool"] = "mifs";
    prov["version"] = kVersion;
    prov["subcommand"] = p.subcommand;
    prov["args"] = args;
    prov["config"] = p.config;
    prov["cwd"] = fs::current_path().string();
    prov["outputs"] = ctx.written();
    atomic_write(out / "run.json", prov.dump(2) + "\n");
    return 0;
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> raw(argv + 1, argv + argc);
    if (!raw.empty() && raw.front() == "replay") {
        Global g;
        auto rest = strip_global({raw.begin() + 1, raw.end()}, g);
        if (rest.size() != 1) {
            throw CLI::ArgumentMismatch("replay takes exactly one run.json path");
        }
        json prov;
        try {
            prov = json::parse(read_text(rest.front()));
        } catch (const json::exception& e) {
            throw format_error(rest.front() + ": " + e.what(), 0);
        }
        if (prov.value("tool", "") != "mifs" || !prov.contains("args") || !prov.contains("cwd")) {
            throw format_error(rest.front() + ": not a mifs provenance record", 0);
        }
        if (prov.value("version", "") != kVersion) {
            std::cerr << "mifs: warning: record written by version " << prov.value("version", "?") << "\n";
        }
        if (!g.out) {
            g.out = fs::path(rest.front()).parent_path().string() + "/replay";
        }
        return run(prov.at("args").get<std::vector<std::string>>(), g, fs::path(prov.at("cwd").get<std::string>()));
    }
    return run(raw, Global{}, std::nullopt);
}

void print_usage(std::ostream& os) {
    AllOpts a;
    Parsed p;
    os << build(a, p)->help();
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage(std::cerr);
        return kExitUsage;
    }
    try {
        return dispatch(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << "mifs: " << e.what() << "\n";
        return kExitUsage;
    } catch (const format_error& e) {
        std::cerr << "mifs: format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const io_error& e) {
        std::cerr << "mifs: I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "mifs: I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const domain_error& e) {
        std::cerr << "mifs: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "mifs: " << e.what() << "\n";
        return 1;
    }
}

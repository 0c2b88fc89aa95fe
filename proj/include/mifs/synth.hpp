#pragma once

// Synthetic multi-task datasets with planted channel relevance.
//
// Each sample draws C independent smooth random fields (white noise blurred by
// a circular Gaussian kernel of std `correlation_length`, rescaled to unit
// variance). Task j's clean output is sum_{c in S_j} a_jc * field_c,
// upsampled by M / N (nearest neighbour); the stored output adds Gaussian
// noise of std `noise_sigma`. Stored features are field_c * scale_c, so the
// scales change feature magnitudes without changing any output.
//
// Unset relevance sets, mixing weights and scales are drawn from the seed:
// disjoint relevance sets when C >= T * |S_j|, mixing weights uniform in
// [0.5, 1.5] normalised to unit l2 norm (unit signal power per task), scales
// log-uniform in [1/4, 4].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mifs/error.hpp"
#include "mifs/io_util.hpp"
#include "mifs/manifest.hpp"
#include "mifs/parallel.hpp"
#include "mifs/rng.hpp"
#include "mifs/tensor.hpp"
#include "mifs/tensor_io.hpp"

namespace mifs {

struct SynthSpec {
    std::size_t channels = 32;
    std::size_t height = 16;
    std::size_t width = 32;
    std::size_t tasks = 3;
    std::size_t relevant_per_task = 4;
    std::size_t samples = 200;
    std::vector<std::vector<int>> relevant;
    std::vector<std::vector<double>> mixing;
    std::vector<double> scales;
    double noise_sigma = 0.0;
    double correlation_length = 2.0;
    std::size_t feature_side = 2;
    std::size_t output_side = 2;
    std::uint64_t seed = 2024;

    std::size_t output_scale() const { return output_side / feature_side; }

    void validate() const {
        if (channels == 0 || height == 0 || width == 0 || tasks == 0 || samples == 0) {
            throw domain_error("synthetic spec has a zero size");
        }
        if (feature_side == 0 || output_side == 0 || output_side % feature_side != 0) {
            throw dimension_error("output patch side must be a positive multiple of the feature patch side");
        }
        if (height % feature_side != 0 || width % feature_side != 0) {
            throw dimension_error("feature size " + std::to_string(height) + "x" + std::to_string(width) +
                                  " is not divisible by patch side " + std::to_string(feature_side));
        }
        if (!(noise_sigma >= 0.0) || !(correlation_length >= 0.0)) {
            throw domain_error("noise and correlation length must be non-negative");
        }
        if (!relevant.empty() && relevant.size() != tasks) {
            throw domain_error("one relevance set per task is required");
        }
        for (const auto& set : relevant) {
            if (set.empty()) {
                throw domain_error("relevance sets must be non-empty");
            }
            for (int c : set) {
                if (c < 0 || static_cast<std::size_t>(c) >= channels) {
                    throw domain_error("relevant channel " + std::to_string(c) + " outside [0, C)");
                }
            }
        }
        if (!mixing.empty()) {
            if (mixing.size() != tasks) {
                throw domain_error("one mixing vector per task is required");
            }
            for (std::size_t j = 0; j < tasks; ++j) {
                if (!relevant.empty() && mixing[j].size() != relevant[j].size()) {
                    throw domain_error("mixing weights of task " + std::to_string(j) +
                                       " do not match its relevance set");
                }
            }
        }
        if (!scales.empty()) {
            if (scales.size() != channels) {
                throw domain_error("one scale per channel is required");
            }
            for (double s : scales) {
                if (s == 0.0 || !std::isfinite(s)) {
                    throw domain_error("channel scales must be finite and non-zero");
                }
            }
        }
        if (relevant.empty() && relevant_per_task == 0) {
            throw domain_error("relevant_per_task must be positive");
        }
        if (relevant.empty() && relevant_per_task > channels) {
            throw domain_error("relevant_per_task exceeds the channel count");
        }
    }

    // Copy with every seed-drawn quantity filled in.
    SynthSpec resolved() const {
        validate();
        SynthSpec s = *this;
        Rng rng(derive_seed(seed, {100}));
        if (s.relevant.empty()) {
            std::vector<int> perm(channels);
            std::iota(perm.begin(), perm.end(), 0);
            auto shuffle = [&] {
                for (std::size_t i = perm.size(); i > 1; --i) {
                    std::swap(perm[i - 1], perm[rng.index(i)]);
                }
            };
            shuffle();
            const bool disjoint = tasks * relevant_per_task <= channels;
            for (std::size_t j = 0; j < tasks; ++j) {
                if (!disjoint) {
                    shuffle();
                }
                const std::size_t start = disjoint ? j * relevant_per_task : 0;
                std::vector<int> set(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                     perm.begin() + static_cast<std::ptrdiff_t>(start + relevant_per_task));
                std::sort(set.begin(), set.end());
                s.relevant.push_back(std::move(set));
            }
        }
        if (s.mixing.empty()) {
            for (const auto& set : s.relevant) {
                std::vector<double> w(set.size());
                double norm = 0.0;
                for (double& v : w) {
                    v = rng.uniform(0.5, 1.5);
                    norm += v * v;
                }
                for (double& v : w) {
                    v /= std::sqrt(norm);
                }
                s.mixing.push_back(std::move(w));
            }
        }
        if (s.scales.empty()) {
            s.scales.resize(channels);
            for (double& v : s.scales) {
                v = std::exp(rng.uniform(std::log(0.25), std::log(4.0)));
            }
        }
        s.validate();
        return s;
    }

    // Power of the clean output of a task (fields are unit variance).
    double signal_power(std::size_t task) const {
        const auto r = resolved();
        double p = 0.0;
        for (double a : r.mixing.at(task)) {
            p += a * a;
        }
        return p;
    }
};

inline nlohmann::json to_json(const SynthSpec& s) {
    return {{"channels", s.channels},
            {"height", s.height},
            {"width", s.width},
            {"tasks", s.tasks},
            {"relevant_per_task", s.relevant_per_task},
            {"samples", s.samples},
            {"relevant", s.relevant},
            {"mixing", s.mixing},
            {"scales", s.scales},
            {"noise_sigma", s.noise_sigma},
            {"correlation_length", s.correlation_length},
            {"feature_side", s.feature_side},
            {"output_side", s.output_side},
            {"seed", s.seed}};
}

// Missing keys keep their defaults.
inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    try {
        s.channels = j.value("channels", s.channels);
        s.height = j.value("height", s.height);
        s.width = j.value("width", s.width);
        s.tasks = j.value("tasks", s.tasks);
        s.relevant_per_task = j.value("relevant_per_task", s.relevant_per_task);
        s.samples = j.value("samples", s.samples);
        s.relevant = j.value("relevant", s.relevant);
        s.mixing = j.value("mixing", s.mixing);
        s.scales = j.value("scales", s.scales);
        s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
        s.correlation_length = j.value("correlation_length", s.correlation_length);
        s.feature_side = j.value("feature_side", s.feature_side);
        s.output_side = j.value("output_side", s.output_side);
        s.seed = j.value("seed", s.seed);
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("malformed synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) {
        return {1.0};
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

// Circular 1-D blur along rows (stride 1) or columns (stride = width).
inline void blur_axis(std::vector<double>& plane, std::size_t height, std::size_t width, bool along_rows,
                      const std::vector<double>& k) {
    const int radius = static_cast<int>(k.size() / 2);
    std::vector<double> out(plane.size(), 0.0);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            double s = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                std::size_t yy = y, xx = x;
                if (along_rows) {
                    xx = static_cast<std::size_t>(((static_cast<long long>(x) + t) % static_cast<long long>(width) +
                                                   static_cast<long long>(width)) %
                                                  static_cast<long long>(width));
                } else {
                    yy = static_cast<std::size_t>(((static_cast<long long>(y) + t) % static_cast<long long>(height) +
                                                   static_cast<long long>(height)) %
                                                  static_cast<long long>(height));
                }
                s += k[static_cast<std::size_t>(t + radius)] * plane[yy * width + xx];
            }
            out[y * width + x] = s;
        }
    }
    plane.swap(out);
}

} // namespace detail

// Unit-variance smooth fields of one sample, C x H x W. `spec` must be resolved.
inline std::vector<double> latent_fields(const SynthSpec& spec, std::size_t sample) {
    const std::size_t plane = spec.height * spec.width;
    std::vector<double> fields(spec.channels * plane);
    Rng rng(derive_seed(spec.seed, {200, sample}));
    const auto k = detail::gaussian_kernel(spec.correlation_length);
    double k2 = 0.0;
    for (double v : k) {
        k2 += v * v;
    }
    // variance of white noise after the separable blur is (sum k^2)^2
    const double norm = 1.0 / k2;
    for (std::size_t c = 0; c < spec.channels; ++c) {
        std::vector<double> p(plane);
        for (double& v : p) {
            v = rng.normal();
        }
        if (k.size() > 1) {
            detail::blur_axis(p, spec.height, spec.width, true, k);
            detail::blur_axis(p, spec.height, spec.width, false, k);
        }
        for (std::size_t i = 0; i < plane; ++i) {
            fields[c * plane + i] = p[i] * norm;
        }
    }
    return fields;
}

// Mixes per-channel planes (C x H x W, any channel labelling via `index_of`)
// into a task output at output resolution.
template <typename ChannelPlane>
Tensor mix_task(const SynthSpec& spec, std::size_t task, ChannelPlane&& plane_of) {
    const std::size_t u = spec.output_scale();
    std::vector<double> low(spec.height * spec.width, 0.0);
    const auto& set = spec.relevant.at(task);
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double a = spec.mixing[task][i];
        const auto plane = plane_of(set[i]);
        for (std::size_t p = 0; p < low.size(); ++p) {
            low[p] += a * plane[p];
        }
    }
    Tensor out(1, spec.height * u, spec.width * u);
    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            out.at(0, y, x) = static_cast<float>(low[(y / u) * spec.width + x / u]);
        }
    }
    return out;
}

inline Tensor clean_output(const SynthSpec& spec, const std::vector<double>& fields, std::size_t task) {
    const std::size_t plane = spec.height * spec.width;
    return mix_task(spec, task, [&](int c) {
        return std::span<const double>(fields.data() + static_cast<std::size_t>(c) * plane, plane);
    });
}

// Deterministic in-memory dataset; `spec` is resolved internally.
inline Dataset generate_dataset(const SynthSpec& raw) {
    const SynthSpec spec = raw.resolved();
    Dataset d;
    d.patch = {spec.feature_side, spec.output_side};
    d.features.resize(spec.samples);
    d.sample_ids.resize(spec.samples);
    for (std::size_t j = 0; j < spec.tasks; ++j) {
        d.task_ids.push_back(static_cast<int>(j));
        d.outputs[static_cast<int>(j)].resize(spec.samples);
    }
    parallel_for(spec.samples, [&](std::size_t s) {
        const auto fields = latent_fields(spec, s);
        Tensor f(spec.channels, spec.height, spec.width);
        const std::size_t plane = f.plane();
        for (std::size_t c = 0; c < spec.channels; ++c) {
            for (std::size_t i = 0; i < plane; ++i) {
                f.values[c * plane + i] = static_cast<float>(fields[c * plane + i] * spec.scales[c]);
            }
        }
        d.features[s] = std::move(f);
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", s);
        d.sample_ids[s] = id;
        for (std::size_t j = 0; j < spec.tasks; ++j) {
            Tensor out = clean_output(spec, fields, j);
            if (spec.noise_sigma > 0.0) {
                Rng noise(derive_seed(spec.seed, {300, s, j}));
                for (float& v : out.values) {
                    v = static_cast<float>(v + spec.noise_sigma * noise.normal());
                }
            }
            d.outputs[static_cast<int>(j)][s] = std::move(out);
        }
    });
    d.validate();
    return d;
}

// Writes features/<id>.ften, outputs/<id>_t<j>.ften, synth_spec.json (the
// resolved spec) and manifest.json into `dir`.
inline DatasetManifest generate(const SynthSpec& raw, const fs::path& dir) {
    const SynthSpec spec = raw.resolved();
    const Dataset d = generate_dataset(spec);
    DatasetManifest m;
    m.root = dir;
    m.patch = d.patch;
    for (int j : d.task_ids) {
        m.tasks.push_back({j, "synthetic-task-" + std::to_string(j)});
    }
    for (std::size_t s = 0; s < d.sample_count(); ++s) {
        SampleEntry e;
        e.id = d.sample_ids[s];
        e.features = "features/" + e.id + ".ften";
        write_tensor(d.features[s], dir / e.features);
        for (int j : d.task_ids) {
            e.outputs[j] = "outputs/" + e.id + "_t" + std::to_string(j) + ".ften";
            write_tensor(d.outputs.at(j)[s], dir / e.outputs[j]);
        }
        m.samples.push_back(std::move(e));
    }
    atomic_write(dir / "synth_spec.json", to_json(spec).dump(2) + "\n");
    save_manifest(m, dir / "manifest.json");
    return m;
}

inline constexpr double kPsnrCeiling = 100.0;

// PSNR (dB) of task outputs recomputed from reconstructed features against the
// clean outputs. The recomputation undoes the channel scales; the peak is the
// clean output's range over all samples. Capped at kPsnrCeiling.
class ProxyEvaluator {
  public:
    explicit ProxyEvaluator(const SynthSpec& raw) : spec_(raw.resolved()), clean_(spec_.tasks) {
        for (auto& per_task : clean_) {
            per_task.resize(spec_.samples);
        }
        parallel_for(spec_.samples, [&](std::size_t s) {
            const auto fields = latent_fields(spec_, s);
            for (std::size_t j = 0; j < spec_.tasks; ++j) {
                clean_[j][s] = clean_output(spec_, fields, j);
            }
        });
        for (const auto& per_task : clean_) {
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& t : per_task) {
                for (float v : t.values) {
                    lo = std::min(lo, static_cast<double>(v));
                    hi = std::max(hi, static_cast<double>(v));
                }
            }
            peaks_.push_back(hi - lo);
        }
    }

    const SynthSpec& spec() const noexcept { return spec_; }
    const std::vector<Tensor>& clean(std::size_t task) const { return clean_.at(task); }
    double peak(std::size_t task) const { return peaks_.at(task); }

    // Head output for one reconstructed sample.
    Tensor predict(const Tensor& r, std::size_t task) const {
        if (r.channels != spec_.channels || r.height != spec_.height || r.width != spec_.width) {
            throw domain_error("reconstructed features do not match the spec's shape");
        }
        std::vector<double> buf(r.plane());
        return mix_task(spec_, task, [&](int c) {
            const auto src = r.channel(r.index_of(c));
            for (std::size_t i = 0; i < buf.size(); ++i) {
                buf[i] = src[i] / spec_.scales[static_cast<std::size_t>(c)];
            }
            return std::span<const double>(buf);
        });
    }

    double operator()(std::span<const Tensor> reconstructed, std::size_t task) const {
        if (task >= spec_.tasks) {
            throw domain_error("task " + std::to_string(task) + " outside the synthetic spec");
        }
        if (reconstructed.size() != spec_.samples) {
            throw domain_error("expected " + std::to_string(spec_.samples) + " reconstructed samples, got " +
                               std::to_string(reconstructed.size()));
        }
        std::vector<double> sq(spec_.samples, 0.0);
        parallel_for(spec_.samples, [&](std::size_t s) {
            const Tensor pred = predict(reconstructed[s], task);
            const Tensor& ref = clean_[task][s];
            double acc = 0.0;
            for (std::size_t i = 0; i < ref.size(); ++i) {
                const double e = static_cast<double>(pred.values[i]) - ref.values[i];
                acc += e * e;
            }
            sq[s] = acc;
        });
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < spec_.samples; ++s) {
            total += sq[s];
            count += clean_[task][s].size();
        }
        return psnr(total / static_cast<double>(count), peaks_[task]);
    }

    static double psnr(double mse, double peak) {
        if (mse == 0.0) {
            return kPsnrCeiling;
        }
        return std::min(kPsnrCeiling, 10.0 * std::log10(peak * peak / mse));
    }

  private:
    SynthSpec spec_;
    std::vector<std::vector<Tensor>> clean_;
    std::vector<double> peaks_;
};

inline double proxy_accuracy(std::span<const Tensor> reconstructed, const SynthSpec& spec, std::size_t task) {
    return ProxyEvaluator(spec)(reconstructed, task);
}

inline double proxy_accuracy(const std::vector<Tensor>& reconstructed, const SynthSpec& spec, std::size_t task) {
    return proxy_accuracy(std::span<const Tensor>(reconstructed), spec, task);
}

} // namespace mifs

#pragma once

// Dataset manifests.
//
// A manifest is a UTF-8 JSON document listing samples, each with one feature
// tensor and one output tensor per task. Paths are relative to the directory
// containing the manifest. See docs/FORMATS.md for the schema.

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mifs/error.hpp"
#include "mifs/io_util.hpp"
#include "mifs/tensor.hpp"
#include "mifs/tensor_io.hpp"

namespace mifs {

// Side lengths of spatially corresponding feature (N) and output (M) patches.
struct PatchConfig {
    std::size_t feature_side = 8;
    std::size_t output_side = 64;

    friend bool operator==(const PatchConfig&, const PatchConfig&) = default;
};

struct TaskInfo {
    int id = 0;
    std::string name;

    friend bool operator==(const TaskInfo&, const TaskInfo&) = default;
};

struct SampleEntry {
    std::string id;
    std::string features;
    std::map<int, std::string> outputs;

    friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

struct DatasetManifest {
    fs::path root; // directory the relative paths resolve against
    PatchConfig patch;
    std::vector<TaskInfo> tasks;
    std::vector<SampleEntry> samples;

    fs::path resolve(const std::string& rel) const { return root / rel; }

    bool has_task(int id) const {
        return std::any_of(tasks.begin(), tasks.end(), [&](const TaskInfo& t) { return t.id == id; });
    }
};

inline constexpr const char* kManifestFormat = "mifs-manifest";

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
    nlohmann::json j;
    j["format"] = kManifestFormat;
    j["version"] = 1;
    j["patch"] = {{"feature_side", m.patch.feature_side}, {"output_side", m.patch.output_side}};
    j["tasks"] = nlohmann::json::array();
    for (const auto& t : m.tasks) {
        j["tasks"].push_back({{"id", t.id}, {"name", t.name}});
    }
    j["samples"] = nlohmann::json::array();
    for (const auto& s : m.samples) {
        nlohmann::json outputs = nlohmann::json::object();
        for (const auto& [task, path] : s.outputs) {
            outputs[std::to_string(task)] = path;
        }
        j["samples"].push_back({{"id", s.id}, {"features", s.features}, {"outputs", outputs}});
    }
    return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j, const fs::path& root) {
    DatasetManifest m;
    m.root = root;
    try {
        if (j.contains("format") && j.at("format") != kManifestFormat) {
            throw domain_error("manifest format tag is not \"" + std::string(kManifestFormat) + "\"");
        }
        if (j.contains("patch")) {
            const auto& p = j.at("patch");
            m.patch.feature_side = p.value("feature_side", m.patch.feature_side);
            m.patch.output_side = p.value("output_side", m.patch.output_side);
        }
        if (m.patch.feature_side == 0 || m.patch.output_side == 0) {
            throw domain_error("patch sides must be positive");
        }
        for (const auto& t : j.at("tasks")) {
            m.tasks.push_back({t.at("id").get<int>(), t.value("name", std::string{})});
        }
        for (const auto& s : j.at("samples")) {
            SampleEntry e;
            e.id = s.at("id").get<std::string>();
            e.features = s.at("features").get<std::string>();
            for (const auto& [key, path] : s.at("outputs").items()) {
                e.outputs[static_cast<int>(parse_int(key, "manifest output task id"))] = path.get<std::string>();
            }
            m.samples.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline DatasetManifest load_manifest(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw format_error(path.string() + ": " + e.what(), e.byte);
    }
    return manifest_from_json(j, path.parent_path());
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
    atomic_write(path, manifest_to_json(m).dump(2) + "\n");
}

// Manifest contents loaded into memory.
struct Dataset {
    PatchConfig patch;
    std::vector<int> task_ids;
    std::vector<std::string> sample_ids;
    std::vector<Tensor> features;
    std::map<int, std::vector<Tensor>> outputs;

    std::size_t sample_count() const noexcept { return features.size(); }

    const std::vector<Tensor>& task_outputs(int task) const {
        auto it = outputs.find(task);
        if (it == outputs.end()) {
            throw domain_error("task id " + std::to_string(task) + " is not part of the dataset");
        }
        return it->second;
    }

    // Shapes agree across samples and every task's output grid aligns with the
    // feature grid: M * feature_height == N * output_height (same for widths).
    void validate() const {
        if (features.empty()) {
            throw domain_error("dataset has no samples");
        }
        const Tensor& ref = features.front();
        for (std::size_t s = 0; s < features.size(); ++s) {
            features[s].validate();
            if (!features[s].same_shape(ref) || features[s].channel_ids != ref.channel_ids) {
                throw domain_error("sample " + sample_label(s) + " has a feature shape different from sample " +
                                   sample_label(0));
            }
        }
        const std::size_t n = patch.feature_side, m = patch.output_side;
        for (int task : task_ids) {
            const auto& outs = task_outputs(task);
            if (outs.size() != features.size()) {
                throw domain_error("task " + std::to_string(task) + " has " + std::to_string(outs.size()) +
                                   " outputs for " + std::to_string(features.size()) + " samples");
            }
            for (std::size_t s = 0; s < outs.size(); ++s) {
                outs[s].validate();
                if (!outs[s].same_shape(outs.front())) {
                    throw domain_error("task " + std::to_string(task) + " output of sample " + sample_label(s) +
                                       " differs in shape from sample " + sample_label(0));
                }
                if (m * ref.height != n * outs[s].height || m * ref.width != n * outs[s].width) {
                    throw dimension_error("task " + std::to_string(task) + " sample " + sample_label(s) + ": output " +
                                          std::to_string(outs[s].height) + "x" + std::to_string(outs[s].width) +
                                          " does not align with features " + std::to_string(ref.height) + "x" +
                                          std::to_string(ref.width) + " at patch ratio " + std::to_string(m) + "/" +
                                          std::to_string(n));
                }
            }
        }
    }

  private:
    std::string sample_label(std::size_t s) const {
        return s < sample_ids.size() ? "'" + sample_ids[s] + "'" : std::to_string(s);
    }
};

inline Dataset load_dataset(const DatasetManifest& m) {
    Dataset d;
    d.patch = m.patch;
    for (const auto& t : m.tasks) {
        d.task_ids.push_back(t.id);
        d.outputs[t.id];
    }
    for (const auto& s : m.samples) {
        d.sample_ids.push_back(s.id);
        d.features.push_back(read_tensor(m.resolve(s.features)));
        for (const auto& t : m.tasks) {
            auto it = s.outputs.find(t.id);
            if (it == s.outputs.end()) {
                throw domain_error("sample '" + s.id + "' lacks an output for task " + std::to_string(t.id));
            }
            d.outputs[t.id].push_back(read_tensor(m.resolve(it->second)));
        }
    }
    d.validate();
    return d;
}

inline Dataset load_dataset(const fs::path& manifest_path) { return load_dataset(load_manifest(manifest_path)); }

} // namespace mifs

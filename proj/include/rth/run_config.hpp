#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "rth/code_inference.hpp"
#include "rth/descriptor.hpp"
#include "rth/forest.hpp"

namespace rth {

// Every tunable of the train/eval pipeline. Defaults here are the documented
// defaults; config files and flags override them field by field.
struct RunConfig {
    std::uint64_t seed = 0;

    PyramidConfig pyramid;
    InferenceParams inference;
    ForestParams forest;

    int clusters = 0;         // k-means scene count for unlabeled training data
    int temporal_smooth = 0;  // majority-filter half window over frames; 0 disables
    std::vector<double> augment_rotations;
    bool allow_resampled_rotation = false;
    bool shuffle_train_labels = false;

    int queries = 50;
    int k = 50;  // precision@k cut-off for eval, result length for query
    bool sanity_self_query = false;

    // Copies the master seed into each stage so one --seed drives everything.
    void derive_seeds();
    std::uint64_t cluster_seed() const noexcept { return seed + 2; }
    std::uint64_t query_sample_seed() const noexcept { return seed + 3; }
    std::uint64_t shuffle_seed() const noexcept { return seed + 4; }

    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

nlohmann::json to_json(const RunConfig& cfg);

// Overrides fields of cfg with the keys present in j. Unknown keys are a
// ConfigError so typos do not pass silently.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace rth

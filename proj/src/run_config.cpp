#include "rth/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "rth/error.hpp"

namespace rth {

void RunConfig::derive_seeds() {
    inference.seed = seed;
    forest.seed = seed + 1;
}

void RunConfig::validate() const {
    pyramid.validate();
    inference.validate();
    forest.validate();
    if (clusters < 0) throw ConfigError("clusters must be non-negative");
    if (temporal_smooth < 0) throw ConfigError("temporal_smooth must be non-negative");
    if (queries < 1) throw ConfigError("queries must be at least 1");
    if (k < 0) throw ConfigError("k must be non-negative");
    for (double a : augment_rotations) {
        const double turns = a / 90.0;
        if (!allow_resampled_rotation && turns != std::floor(turns))
            throw ConfigError("rotation " + std::to_string(a) + " is not a multiple of 90 degrees");
    }
}

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& l : cfg.pyramid.levels)
        levels.push_back({{"grid", l.grid}, {"patch_px", l.patch_px}, {"overlapped", l.overlapped}});
    nlohmann::json budget = nullptr;
    if (cfg.inference.pair_budget) budget = *cfg.inference.pair_budget;
    return {
        {"seed", cfg.seed},
        {"canonical_size", cfg.pyramid.canonical_size},
        {"stride_regions", cfg.pyramid.stride_regions},
        {"levels", levels},
        {"bits", cfg.inference.bits},
        {"sweeps", cfg.inference.sweeps},
        {"restarts", cfg.inference.restarts},
        {"pair_budget", budget},
        {"trees", cfg.forest.trees},
        {"depth", cfg.forest.max_depth},
        {"min_gain", cfg.forest.min_gain},
        {"candidate_pairs", cfg.forest.candidate_pairs},
        {"bag_fraction", cfg.forest.bag_fraction},
        {"clusters", cfg.clusters},
        {"temporal_smooth", cfg.temporal_smooth},
        {"augment_rotations", cfg.augment_rotations},
        {"allow_resampled_rotation", cfg.allow_resampled_rotation},
        {"shuffle_train_labels", cfg.shuffle_train_labels},
        {"queries", cfg.queries},
        {"k", cfg.k},
        {"sanity_self_query", cfg.sanity_self_query},
    };
}

void apply_json(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("configuration document must be a JSON object");
    static const std::set<std::string> known{
        "seed", "canonical_size", "stride_regions", "levels", "bits", "sweeps", "restarts", "pair_budget", "trees",
        "depth", "min_gain", "candidate_pairs", "bag_fraction", "clusters", "temporal_smooth",
        "augment_rotations", "allow_resampled_rotation", "shuffle_train_labels", "queries", "k",
        "sanity_self_query"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");

    try {
        auto take = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        take("seed", cfg.seed);
        take("canonical_size", cfg.pyramid.canonical_size);
        take("stride_regions", cfg.pyramid.stride_regions);
        if (j.contains("levels")) {
            cfg.pyramid.levels.clear();
            for (const auto& l : j.at("levels"))
                cfg.pyramid.levels.push_back(
                    {l.at("grid").get<int>(), l.at("patch_px").get<int>(), l.value("overlapped", false)});
        }
        take("bits", cfg.inference.bits);
        take("sweeps", cfg.inference.sweeps);
        take("restarts", cfg.inference.restarts);
        if (j.contains("pair_budget")) {
            const auto& b = j.at("pair_budget");
            cfg.inference.pair_budget = b.is_null() ? std::nullopt : std::optional<std::uint64_t>(b.get<std::uint64_t>());
        }
        take("trees", cfg.forest.trees);
        take("depth", cfg.forest.max_depth);
        take("min_gain", cfg.forest.min_gain);
        take("candidate_pairs", cfg.forest.candidate_pairs);
        take("bag_fraction", cfg.forest.bag_fraction);
        take("clusters", cfg.clusters);
        take("temporal_smooth", cfg.temporal_smooth);
        take("augment_rotations", cfg.augment_rotations);
        take("allow_resampled_rotation", cfg.allow_resampled_rotation);
        take("shuffle_train_labels", cfg.shuffle_train_labels);
        take("queries", cfg.queries);
        take("k", cfg.k);
        take("sanity_self_query", cfg.sanity_self_query);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad configuration value: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    RunConfig cfg;
    try {
        apply_json(cfg, nlohmann::json::parse(in, nullptr, true, true));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return cfg;
}

}  // namespace rth

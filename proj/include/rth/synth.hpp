#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "rth/image.hpp"

namespace rth {

// Procedural stand-in for paired diagnosis/surveillance videos: each scene
// is a random multi-scale texture, each view a jittered photometric and
// geometric variant of it.
struct SynthConfig {
    int scenes = 20;
    int views = 30;        // per scene
    int train_views = 15;  // per scene; the rest go to the test manifest
    int image_size = 192;
    int max_shift = 8;     // pixels, each axis
    double gain_min = 0.7;
    double gain_max = 1.3;
    double bias_max = 20.0;       // bias drawn from [-bias_max, bias_max]
    double noise_sigma_max = 4.0;  // sigma drawn from [0, noise_sigma_max]
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);

struct ViewJitter {
    int dx = 0;
    int dy = 0;
    double gain = 1.0;
    double bias = 0.0;
    double noise_sigma = 0.0;
};

// Base texture of side image_size + 2 * max_shift.
GrayImage scene_texture(const SynthConfig& cfg, int scene);
ViewJitter view_jitter(const SynthConfig& cfg, int scene, int view);
// Noise is drawn from a stream seeded by (seed, scene, view).
GrayImage render_view(const SynthConfig& cfg, const GrayImage& texture, int scene, int view);

// Views of each scene split into train and test view indices (seeded).
struct ViewSplit {
    std::vector<int> train;
    std::vector<int> test;
};
ViewSplit split_views(const SynthConfig& cfg, int scene);

struct SynthSummary {
    std::size_t train_records = 0;
    std::size_t test_records = 0;
};

// Writes images/scene_SSS_view_VVV.pgm, train.jsonl, test.jsonl and
// synth_config.json under out_dir.
SynthSummary write_synthetic_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg);

}  // namespace rth

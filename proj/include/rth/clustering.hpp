#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rth/code_inference.hpp"
#include "rth/image.hpp"

namespace rth {

struct KMeansParams {
    int clusters = 1;
    std::uint64_t seed = 0;
    int max_iterations = 100;
    double relative_tolerance = 1e-4;  // stop once inertia improves by less than this fraction
    int feature_size = 32;             // images are downsampled to feature_size^2 intensities
};

struct KMeansResult {
    SceneLabeling labels;
    double inertia = 0.0;
    int iterations = 0;
};

// Plain Lloyd iterations with k-means++ seeding on points in R^dim
// (row-major). Empty clusters are re-seeded from the point farthest from
// its centre. Labels are renumbered in order of first appearance.
KMeansResult kmeans(std::span<const double> points, std::size_t dim, const KMeansParams& params);

// Intensity-based scene clustering: bilinear downsample to
// feature_size x feature_size, then kmeans.
SceneLabeling cluster_scenes(std::span<const GrayImage> images, int k, std::uint64_t seed);
KMeansResult cluster_scenes(std::span<const GrayImage> images, const KMeansParams& params);

// Majority filter over a temporally ordered label sequence with the given
// half window; ties keep the current label. Result is renumbered densely.
SceneLabeling smooth_temporal(const SceneLabeling& ordered, int half_window);

}  // namespace rth

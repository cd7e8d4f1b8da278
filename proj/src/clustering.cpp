#include "rth/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "rth/error.hpp"

namespace rth {

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

std::vector<int> renumber_by_first_use(const std::vector<int>& labels) {
    std::map<int, int> mapping;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = mapping.try_emplace(labels[i], static_cast<int>(mapping.size()));
        out[i] = it->second;
    }
    return out;
}

}  // namespace

KMeansResult kmeans(std::span<const double> points, std::size_t dim, const KMeansParams& params) {
    if (dim == 0 || points.size() % dim != 0) throw DataError("point buffer is not a multiple of dim");
    const std::size_t n = points.size() / dim;
    if (params.clusters < 1) throw ConfigError("k must be at least 1");
    const auto k = static_cast<std::size_t>(params.clusters);
    if (k > n) throw ConfigError("k exceeds the number of images");

    const auto point = [&](std::size_t i) { return points.data() + i * dim; };
    std::mt19937_64 rng(params.seed);
    std::vector<double> centers(k * dim);
    const auto center = [&](std::size_t c) { return centers.data() + c * dim; };

    // k-means++
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t chosen = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(point(chosen), dim, center(c));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(point(i), center(c), dim));
            total += nearest[i];
        }
        if (c + 1 == k) break;
        if (total <= 0.0) {
            // every point coincides with a centre already; take the first unused index
            chosen = c + 1;
            continue;
        }
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= nearest[i];
            if (target < 0.0 && nearest[i] > 0.0) {
                chosen = i;
                break;
            }
        }
    }

    std::vector<int> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    KMeansResult result;
    double previous = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(point(i), center(c), dim);
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            assign[i] = best_c;
            dist[i] = best;
            inertia += best;
        }

        // re-seed empty clusters from the farthest points
        std::vector<std::size_t> counts(k, 0);
        for (int a : assign) ++counts[a];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i)
                if (counts[assign[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
            if (far == n) break;
            --counts[assign[far]];
            inertia -= dist[far];
            assign[far] = static_cast<int>(c);
            dist[far] = 0.0;
            counts[c] = 1;
        }

        std::fill(centers.begin(), centers.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < dim; ++d) center(assign[i])[d] += point(i)[d];
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t d = 0; d < dim; ++d) center(c)[d] /= static_cast<double>(counts[c]);

        result.iterations = iter + 1;
        if (std::isfinite(previous) && previous - inertia <= params.relative_tolerance * previous) break;
        previous = inertia;
    }

    result.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) result.inertia += squared_distance(point(i), center(assign[i]), dim);

    result.labels.labels = renumber_by_first_use(assign);
    return result;
}

KMeansResult cluster_scenes(std::span<const GrayImage> images, const KMeansParams& params) {
    if (images.empty()) throw DataError("no images to cluster");
    const auto side = params.feature_size;
    const std::size_t dim = static_cast<std::size_t>(side) * side;
    std::vector<double> features;
    features.reserve(images.size() * dim);
    for (const auto& img : images) {
        const auto small = resize_bilinear(img, side, side);
        features.insert(features.end(), small.pixels().begin(), small.pixels().end());
    }
    return kmeans(features, dim, params);
}

SceneLabeling cluster_scenes(std::span<const GrayImage> images, int k, std::uint64_t seed) {
    KMeansParams params;
    params.clusters = k;
    params.seed = seed;
    return cluster_scenes(images, params).labels;
}

SceneLabeling smooth_temporal(const SceneLabeling& ordered, int half_window) {
    if (half_window <= 0) return ordered;
    const auto& in = ordered.labels;
    const auto n = static_cast<std::ptrdiff_t>(in.size());
    std::vector<int> out(in.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        std::map<int, int> votes;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half_window);
             j <= std::min<std::ptrdiff_t>(n - 1, i + half_window); ++j)
            ++votes[in[j]];
        int best = in[i];
        int best_votes = votes[in[i]];
        for (const auto& [label, count] : votes)
            if (count > best_votes) {
                best = label;
                best_votes = count;
            }
        out[i] = best;
    }
    return {renumber_by_first_use(out)};
}

}  // namespace rth

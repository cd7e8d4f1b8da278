#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rth {

// Mean of precision@r over the ranks r holding a relevant item, divided by
// the number of relevant items in the ground truth (not just those ranked).
double average_precision(std::span<const std::uint8_t> ranked_relevance, std::size_t total_relevant);

// Fraction of the first min(k, size) items that are relevant.
double precision_at_k(std::span<const std::uint8_t> ranked_relevance, std::size_t k);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// Interpolated precision (best precision at any recall >= level) at
// evenly spaced recall levels 0, 1/steps, ..., 1.
std::vector<PrPoint> interpolated_pr_curve(std::span<const std::uint8_t> ranked_relevance,
                                           std::size_t total_relevant, std::size_t steps = 20);

}  // namespace rth

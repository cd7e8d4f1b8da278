#include "rth/metrics.hpp"

#include <algorithm>

#include "rth/error.hpp"

namespace rth {

double average_precision(std::span<const std::uint8_t> ranked_relevance, std::size_t total_relevant) {
    if (ranked_relevance.empty()) throw DataError("average precision of an empty ranking");
    if (total_relevant == 0) throw DataError("average precision needs at least one relevant item");
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
        if (!ranked_relevance[r]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    return sum / static_cast<double>(total_relevant);
}

double precision_at_k(std::span<const std::uint8_t> ranked_relevance, std::size_t k) {
    if (ranked_relevance.empty()) throw DataError("precision of an empty ranking");
    if (k == 0) throw DataError("precision@k needs k >= 1");
    const std::size_t top = std::min(k, ranked_relevance.size());
    const auto hits = std::count_if(ranked_relevance.begin(), ranked_relevance.begin() + static_cast<std::ptrdiff_t>(top),
                                    [](std::uint8_t v) { return v != 0; });
    return static_cast<double>(hits) / static_cast<double>(top);
}

std::vector<PrPoint> interpolated_pr_curve(std::span<const std::uint8_t> ranked_relevance,
                                           std::size_t total_relevant, std::size_t steps) {
    if (total_relevant == 0) throw DataError("PR curve needs at least one relevant item");
    if (steps == 0) throw DataError("PR curve needs at least one step");
    // (recall, precision) after each rank
    std::vector<PrPoint> raw;
    raw.reserve(ranked_relevance.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
        hits += ranked_relevance[r] ? 1 : 0;
        raw.push_back({static_cast<double>(hits) / static_cast<double>(total_relevant),
                       static_cast<double>(hits) / static_cast<double>(r + 1)});
    }
    // suffix maximum of precision
    for (std::size_t i = raw.size(); i-- > 1;) raw[i - 1].precision = std::max(raw[i - 1].precision, raw[i].precision);

    std::vector<PrPoint> curve;
    curve.reserve(steps + 1);
    std::size_t cursor = 0;
    for (std::size_t s = 0; s <= steps; ++s) {
        const double level = static_cast<double>(s) / static_cast<double>(steps);
        while (cursor < raw.size() && raw[cursor].recall < level - 1e-12) ++cursor;
        curve.push_back({level, cursor < raw.size() ? raw[cursor].precision : 0.0});
    }
    return curve;
}

}  // namespace rth

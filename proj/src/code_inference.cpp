#include "rth/code_inference.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_set>

#include "rth/error.hpp"

namespace rth {

std::vector<std::uint8_t> CodeMatrix::column(std::size_t bit) const {
    std::vector<std::uint8_t> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = get(i, bit);
    return out;
}

void CodeMatrix::set_column(std::size_t bit, std::span<const std::uint8_t> values) {
    if (values.size() != rows_) throw DataError("column length does not match code matrix rows");
    for (std::size_t i = 0; i < rows_; ++i) set(i, bit, values[i]);
}

std::vector<std::uint8_t> CodeMatrix::row(std::size_t row) const {
    return {cells_.begin() + static_cast<std::ptrdiff_t>(row * bits_),
            cells_.begin() + static_cast<std::ptrdiff_t>((row + 1) * bits_)};
}

int CodeMatrix::prefix_distance(std::size_t i, std::size_t j, std::size_t prefix) const {
    int d = 0;
    for (std::size_t r = 0; r < prefix; ++r) d += get(i, r) != get(j, r);
    return d;
}

void InferenceParams::validate() const {
    if (bits < 1) throw ConfigError("code length must be at least 1 bit");
    if (sweeps < 1) throw ConfigError("sweeps must be at least 1");
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
}

double pair_loss(int bit_i, int bit_j, bool same_scene, int d_prev, int total_bits) {
    const double d = d_prev + (bit_i != bit_j ? 1 : 0);
    if (same_scene) return d * d;
    const double slack = std::max(0.5 * total_bits - d, 0.0);
    return slack * slack;
}

double bit_objective(std::span<const std::uint8_t> column, const CodeMatrix& codes, std::size_t bit,
                     const SceneLabeling& labels, int total_bits) {
    const std::size_t n = labels.size();
    if (column.size() != n || codes.rows() != n) throw DataError("column, codes and labels disagree on n");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                total += pair_loss(column[i], column[j], labels.same_scene(i, j),
                                   codes.prefix_distance(i, j, bit), total_bits);
    return total;
}

namespace {

// Each image's partners in the objective, stored as a CSR adjacency so that
// a bit flip is evaluated in O(degree). Every unordered pair appears in both
// endpoints' lists, so the objective counts it twice like the ordered sum.
class PairGraph {
public:
    PairGraph(const SceneLabeling& labels, const InferenceParams& params) : n_(labels.size()) {
        std::vector<std::vector<std::uint32_t>> adj(n_);
        const auto add = [&](std::size_t i, std::size_t j) {
            adj[i].push_back(static_cast<std::uint32_t>(j));
            adj[j].push_back(static_cast<std::uint32_t>(i));
        };

        std::uint64_t cross_total = 0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) {
                if (labels.same_scene(i, j))
                    add(i, j);
                else
                    ++cross_total;
            }

        if (!params.pair_budget || cross_total <= *params.pair_budget) {
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = i + 1; j < n_; ++j)
                    if (!labels.same_scene(i, j)) add(i, j);
        } else {
            sample_cross_pairs(labels, *params.pair_budget, params.seed, add);
        }

        offsets_.assign(n_ + 1, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            std::sort(adj[i].begin(), adj[i].end());
            offsets_[i + 1] = offsets_[i] + adj[i].size();
        }
        partner_.reserve(offsets_.back());
        same_.reserve(offsets_.back());
        for (std::size_t i = 0; i < n_; ++i)
            for (auto j : adj[i]) {
                partner_.push_back(j);
                same_.push_back(labels.same_scene(i, j) ? 1 : 0);
            }
        dist_.assign(partner_.size(), 0);
    }

    std::size_t size() const noexcept { return n_; }
    std::uint64_t unordered_pairs() const noexcept { return partner_.size() / 2; }

    void load_prefix(const CodeMatrix& codes, std::size_t prefix) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t s = offsets_[i]; s < offsets_[i + 1]; ++s)
                dist_[s] = static_cast<std::uint16_t>(codes.prefix_distance(i, partner_[s], prefix));
    }

    void absorb(std::span<const std::uint8_t> column) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t s = offsets_[i]; s < offsets_[i + 1]; ++s)
                dist_[s] += column[i] != column[partner_[s]];
    }

    double objective(std::span<const std::uint8_t> column, int total_bits) const {
        double total = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t s = offsets_[i]; s < offsets_[i + 1]; ++s)
                total += pair_loss(column[i], column[partner_[s]], same_[s] != 0, dist_[s], total_bits);
        return total;
    }

    // Objective change if image i's bit were flipped.
    double flip_delta(std::span<const std::uint8_t> column, std::size_t i, int total_bits) const {
        const int flipped = column[i] ? 0 : 1;
        double delta = 0.0;
        for (std::size_t s = offsets_[i]; s < offsets_[i + 1]; ++s) {
            const int other = column[partner_[s]];
            const bool same = same_[s] != 0;
            delta += pair_loss(flipped, other, same, dist_[s], total_bits) -
                     pair_loss(column[i], other, same, dist_[s], total_bits);
        }
        return 2.0 * delta;
    }

private:
    template <class Add>
    void sample_cross_pairs(const SceneLabeling& labels, std::uint64_t budget, std::uint64_t seed, Add&& add) {
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::unordered_set<std::uint64_t> taken;
        taken.reserve(budget * 2);
        std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
        while (taken.size() < budget) {
            std::size_t i = pick(rng);
            std::size_t j = pick(rng);
            if (i == j || labels.same_scene(i, j)) continue;
            if (i > j) std::swap(i, j);
            if (taken.insert(static_cast<std::uint64_t>(i) * n_ + j).second) add(i, j);
        }
    }

    std::size_t n_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> partner_;
    std::vector<std::uint8_t> same_;
    std::vector<std::uint16_t> dist_;
};

std::vector<std::uint8_t> random_column(std::size_t n, std::uint64_t seed, std::size_t bit, int start) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(bit), static_cast<std::uint32_t>(start)};
    std::mt19937_64 rng(seq);
    std::vector<std::uint8_t> column(n);
    for (auto& b : column) b = static_cast<std::uint8_t>(rng() >> 63);
    return column;
}

std::vector<std::uint8_t> descend(const PairGraph& graph, std::vector<std::uint8_t> column, std::size_t bit,
                                  const InferenceParams& params, BitReport* report) {
    double current = graph.objective(column, params.bits);
    BitReport local;
    local.bit = bit;
    local.initial_objective = current;

    for (int sweep = 0; sweep < params.sweeps; ++sweep) {
        bool flipped = false;
        for (std::size_t i = 0; i < graph.size(); ++i) {
            const double delta = graph.flip_delta(column, i, params.bits);
            if (delta < 0.0) {
                column[i] ^= 1;
                current += delta;
                flipped = true;
            }
        }
        ++local.sweeps;
        local.trace.push_back(current);
        if (!flipped) {
            local.converged = true;
            break;
        }
    }
    // Recompute rather than trust the running sum.
    local.final_objective = graph.objective(column, params.bits);
    if (report) *report = std::move(local);
    return column;
}

std::vector<std::uint8_t> descend_from_random(const PairGraph& graph, std::size_t bit, const InferenceParams& params,
                                              BitReport* report) {
    std::vector<std::uint8_t> best;
    BitReport best_report;
    for (int start = 0; start < params.restarts; ++start) {
        BitReport r;
        auto column = descend(graph, random_column(graph.size(), params.seed, bit, start), bit, params, &r);
        if (start == 0 || r.final_objective < best_report.final_objective) {
            r.start = start;
            best = std::move(column);
            best_report = std::move(r);
        }
    }
    if (report) *report = std::move(best_report);
    return best;
}

void check_labels(const SceneLabeling& labels) {
    if (labels.size() < 2) throw DataError("code inference needs at least two images");
}

}  // namespace

std::vector<std::uint8_t> optimize_bit(const CodeMatrix& codes, std::size_t bit, const SceneLabeling& labels,
                                       const InferenceParams& params,
                                       std::optional<std::span<const std::uint8_t>> init, BitReport* report) {
    params.validate();
    check_labels(labels);
    if (codes.rows() != labels.size()) throw DataError("code matrix rows do not match labels");
    if (bit >= codes.bits()) throw DataError("bit index outside code matrix");

    PairGraph graph(labels, params);
    graph.load_prefix(codes, bit);
    if (!init) return descend_from_random(graph, bit, params, report);
    if (init->size() != labels.size()) throw DataError("initial column length does not match labels");
    return descend(graph, std::vector<std::uint8_t>(init->begin(), init->end()), bit, params, report);
}

CodeMatrix infer_codes(const SceneLabeling& labels, const InferenceParams& params, InferenceReport* report) {
    params.validate();
    check_labels(labels);

    const auto m = static_cast<std::size_t>(params.bits);
    CodeMatrix codes(labels.size(), m);
    PairGraph graph(labels, params);
    InferenceReport local;
    local.seed = params.seed;
    local.pairs_used = graph.unordered_pairs();

    for (std::size_t bit = 0; bit < m; ++bit) {
        BitReport bit_report;
        auto column = descend_from_random(graph, bit, params, &bit_report);
        codes.set_column(bit, column);
        graph.absorb(column);
        local.objective_sum += bit_report.final_objective;
        local.bits.push_back(std::move(bit_report));
    }
    local.final_objective = local.bits.back().final_objective;
    if (report) *report = std::move(local);
    return codes;
}

}  // namespace rth

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rth {

// Per-image scene ids; two images have affinity 1 iff their ids are equal.
struct SceneLabeling {
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool same_scene(std::size_t i, std::size_t j) const { return labels[i] == labels[j]; }
};

// n x m bit matrix. Column r holds bit r of every image's code.
class CodeMatrix {
public:
    CodeMatrix() = default;
    CodeMatrix(std::size_t rows, std::size_t bits) : rows_(rows), bits_(bits), cells_(rows * bits, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t bits() const noexcept { return bits_; }

    std::uint8_t get(std::size_t row, std::size_t bit) const { return cells_[row * bits_ + bit]; }
    void set(std::size_t row, std::size_t bit, std::uint8_t value) { cells_[row * bits_ + bit] = value ? 1 : 0; }

    std::vector<std::uint8_t> column(std::size_t bit) const;
    void set_column(std::size_t bit, std::span<const std::uint8_t> values);
    std::vector<std::uint8_t> row(std::size_t row) const;

    // Hamming distance between rows i and j over columns [0, prefix).
    int prefix_distance(std::size_t i, std::size_t j, std::size_t prefix) const;

    bool operator==(const CodeMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t bits_ = 0;
    std::vector<std::uint8_t> cells_;
};

struct InferenceParams {
    int bits = 64;
    int sweeps = 20;
    // Independent random starting columns per bit; the best descent wins.
    int restarts = 4;
    std::uint64_t seed = 0;
    // Cap on sampled unordered cross-scene pairs; unset means every pair.
    std::optional<std::uint64_t> pair_budget;

    void validate() const;
    bool operator==(const InferenceParams&) const = default;
};

// Quadratic hinge loss for one pair at the bit being optimised. d_prev is
// the Hamming distance over the already fixed bits; total_bits sets the
// dissimilar-pair margin at half the full code length.
double pair_loss(int bit_i, int bit_j, bool same_scene, int d_prev, int total_bits);

// Sum of pair_loss over all ordered pairs i != j when column is used as bit
// `bit` on top of codes' columns [0, bit).
double bit_objective(std::span<const std::uint8_t> column, const CodeMatrix& codes, std::size_t bit,
                     const SceneLabeling& labels, int total_bits);

struct BitReport {
    std::size_t bit = 0;
    int start = 0;  // which random start produced the kept column
    double initial_objective = 0.0;
    double final_objective = 0.0;
    int sweeps = 0;
    bool converged = false;  // last sweep made no flip
    std::vector<double> trace;  // objective after each sweep
};

// Greedy single-flip coordinate descent for column `bit` given the fixed
// columns [0, bit). With init the descent runs once from it; otherwise it
// runs from params.restarts seeded uniform random columns and keeps the
// lowest final objective (earliest start on ties). The report describes
// the kept run.
std::vector<std::uint8_t> optimize_bit(const CodeMatrix& codes, std::size_t bit, const SceneLabeling& labels,
                                       const InferenceParams& params,
                                       std::optional<std::span<const std::uint8_t>> init = std::nullopt,
                                       BitReport* report = nullptr);

struct InferenceReport {
    std::uint64_t seed = 0;
    std::vector<BitReport> bits;
    double objective_sum = 0.0;      // sum of every bit's final objective
    double final_objective = 0.0;    // objective of the full m-bit code
    std::uint64_t pairs_used = 0;    // unordered pairs in the objective
};

// Optimises bits 0..m-1 in order, each conditioned on the previous ones.
CodeMatrix infer_codes(const SceneLabeling& labels, const InferenceParams& params,
                       InferenceReport* report = nullptr);

}  // namespace rth

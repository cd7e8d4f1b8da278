#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rth/binary_code.hpp"
#include "rth/code_inference.hpp"
#include "rth/descriptor.hpp"

namespace rth {

struct ForestParams {
    int trees = 100;
    int max_depth = 10;
    double min_gain = std::exp(-10.0);
    int candidate_pairs = 128;
    double bag_fraction = 1.0;  // bootstrap draws per tree as a fraction of n, with replacement
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const ForestParams&) const = default;
};

// Split nodes send x right when x[a] > x[b]. Leaves carry alpha, the
// fraction of label-1 training samples that reached them.
struct TreeNode {
    bool leaf = true;
    std::uint16_t a = 0;
    std::uint16_t b = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double alpha = 0.0;

    bool operator==(const TreeNode&) const = default;
};

// Nodes in breadth-first order, root at index 0.
class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

    std::size_t leaf_index(std::span<const double> x) const;
    double alpha(std::span<const double> x) const { return nodes_[leaf_index(x)].alpha; }

    // Edges on the longest root-to-leaf path.
    int depth() const;

    bool operator==(const DecisionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

// Ensemble realising one bit's hashing function.
struct BitForest {
    std::vector<DecisionTree> trees;

    double mean_alpha(std::span<const double> x) const;
    // 0 if the mean tree response is below 0.5, otherwise 1.
    int hash_bit(std::span<const double> x) const { return mean_alpha(x) < 0.5 ? 0 : 1; }

    bool operator==(const BitForest&) const = default;
};

// One BitForest per code bit.
class HashForest {
public:
    HashForest() = default;
    HashForest(std::size_t descriptor_length, std::vector<BitForest> forests);

    std::size_t bits() const noexcept { return forests_.size(); }
    std::size_t descriptor_length() const noexcept { return descriptor_length_; }
    const std::vector<BitForest>& forests() const noexcept { return forests_; }

    BinaryCode encode(const Descriptor& x) const;

    bool operator==(const HashForest&) const = default;

private:
    std::size_t descriptor_length_ = 0;
    std::vector<BitForest> forests_;
};

struct LabelCounts {
    std::size_t zeros = 0;
    std::size_t ones = 0;

    std::size_t total() const noexcept { return zeros + ones; }
};

// Shannon entropy in bits of a two-label set.
double entropy(std::size_t count0, std::size_t count1);
double entropy(const LabelCounts& c);

// Parent entropy minus the size-weighted child entropies.
double info_gain(const LabelCounts& parent, const LabelCounts& left, const LabelCounts& right);

// Grows one tree on data[sample] for each index in samples (duplicates allowed).
DecisionTree train_tree(std::span<const Descriptor> data, std::span<const std::uint8_t> labels,
                        std::span<const std::uint32_t> samples, const ForestParams& params, std::mt19937_64& rng);

// Trains params.trees trees on bootstrap samples. `bit` only selects the
// per-tree RNG streams so that forests for different bits are independent.
BitForest train_forest_for_bit(std::span<const Descriptor> data, std::span<const std::uint8_t> bit_column,
                               const ForestParams& params, std::size_t bit = 0);

// One forest per column of codes; forests train in parallel.
HashForest train_hash_forest(std::span<const Descriptor> data, const CodeMatrix& codes, const ForestParams& params);

}  // namespace rth

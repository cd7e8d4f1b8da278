#include "rth/forest.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

#include "rth/error.hpp"
#include "rth/parallel.hpp"

namespace rth {

void ForestParams::validate() const {
    if (trees < 1) throw ConfigError("forest needs at least one tree");
    if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (!(min_gain >= 0.0)) throw ConfigError("min_gain must be non-negative");
    if (candidate_pairs < 1) throw ConfigError("candidate_pairs must be at least 1");
    if (!(bag_fraction > 0.0)) throw ConfigError("bag_fraction must be positive");
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw DataError("decision tree needs at least one node");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.leaf) {
            if (!(n.alpha >= 0.0 && n.alpha <= 1.0)) throw DataError("leaf alpha outside [0, 1]");
        } else if (n.left <= i || n.right <= i || n.left >= nodes_.size() || n.right >= nodes_.size()) {
            throw DataError("decision tree child index out of order");
        }
    }
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf) {
        const auto& n = nodes_[i];
        i = x[n.a] > x[n.b] ? n.right : n.left;
    }
    return i;
}

int DecisionTree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    // Children always follow their parent in breadth-first order.
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].leaf) {
            depth[nodes_[i].left] = depth[i] + 1;
            depth[nodes_[i].right] = depth[i] + 1;
        }
    }
    return deepest;
}

double BitForest::mean_alpha(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.alpha(x);
    return sum / static_cast<double>(trees.size());
}

HashForest::HashForest(std::size_t descriptor_length, std::vector<BitForest> forests)
    : descriptor_length_(descriptor_length), forests_(std::move(forests)) {}

BinaryCode HashForest::encode(const Descriptor& x) const {
    if (x.size() != descriptor_length_)
        throw DataError("descriptor has " + std::to_string(x.size()) + " values, forest expects " +
                        std::to_string(descriptor_length_));
    BinaryCode code(forests_.size());
    for (std::size_t i = 0; i < forests_.size(); ++i) code.set(i, forests_[i].hash_bit(x.values) == 1);
    return code;
}

double entropy(std::size_t count0, std::size_t count1) {
    const std::size_t total = count0 + count1;
    if (total == 0) throw DataError("entropy of an empty set");
    double h = 0.0;
    for (std::size_t c : {count0, count1}) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

double entropy(const LabelCounts& c) { return entropy(c.zeros, c.ones); }

double info_gain(const LabelCounts& parent, const LabelCounts& left, const LabelCounts& right) {
    if (parent.total() == 0) throw DataError("information gain of an empty set");
    if (left.zeros + right.zeros != parent.zeros || left.ones + right.ones != parent.ones)
        throw DataError("split children do not partition the parent");
    const double n = static_cast<double>(parent.total());
    double children = 0.0;
    if (left.total() > 0) children += static_cast<double>(left.total()) * entropy(left);
    if (right.total() > 0) children += static_cast<double>(right.total()) * entropy(right);
    return entropy(parent) - children / n;
}

namespace {

struct PendingNode {
    std::uint32_t index;
    int depth;
    std::vector<std::uint32_t> samples;
};

LabelCounts count_labels(std::span<const std::uint8_t> labels, std::span<const std::uint32_t> samples) {
    LabelCounts c;
    for (auto s : samples) (labels[s] ? c.ones : c.zeros) += 1;
    return c;
}

}  // namespace

DecisionTree train_tree(std::span<const Descriptor> data, std::span<const std::uint8_t> labels,
                        std::span<const std::uint32_t> samples, const ForestParams& params, std::mt19937_64& rng) {
    params.validate();
    if (samples.empty()) throw DataError("tree training needs at least one sample");
    if (data.size() != labels.size()) throw DataError("descriptor and label counts differ");
    const std::size_t dim = data.front().size();
    if (dim < 2) throw DataError("pairwise splits need descriptors with at least two elements");
    if (dim > 65536) throw DataError("descriptor too long for 16-bit split indices");

    std::uniform_int_distribution<std::size_t> pick_first(0, dim - 1);
    std::uniform_int_distribution<std::size_t> pick_second(0, dim - 2);

    std::vector<TreeNode> nodes(1);
    std::deque<PendingNode> queue;
    queue.push_back({0, 0, {samples.begin(), samples.end()}});

    while (!queue.empty()) {
        PendingNode work = std::move(queue.front());
        queue.pop_front();
        const LabelCounts counts = count_labels(labels, work.samples);
        auto make_leaf = [&] {
            nodes[work.index].leaf = true;
            nodes[work.index].alpha = static_cast<double>(counts.ones) / static_cast<double>(counts.total());
        };
        if (work.depth >= params.max_depth || counts.zeros == 0 || counts.ones == 0) {
            make_leaf();
            continue;
        }

        double best_gain = -1.0;
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        LabelCounts best_right;
        for (int c = 0; c < params.candidate_pairs; ++c) {
            const std::size_t a = pick_first(rng);
            std::size_t b = pick_second(rng);
            if (b >= a) ++b;
            LabelCounts right;
            for (auto s : work.samples) {
                const auto& x = data[s].values;
                if (x[a] > x[b]) (labels[s] ? right.ones : right.zeros) += 1;
            }
            const LabelCounts left{counts.zeros - right.zeros, counts.ones - right.ones};
            const double gain = info_gain(counts, left, right);
            if (gain > best_gain) {
                best_gain = gain;
                best_a = a;
                best_b = b;
                best_right = right;
            }
        }

        if (best_gain < params.min_gain || best_right.total() == 0 || best_right.total() == counts.total()) {
            make_leaf();
            continue;
        }

        std::vector<std::uint32_t> left_samples;
        std::vector<std::uint32_t> right_samples;
        left_samples.reserve(counts.total() - best_right.total());
        right_samples.reserve(best_right.total());
        for (auto s : work.samples) {
            const auto& x = data[s].values;
            (x[best_a] > x[best_b] ? right_samples : left_samples).push_back(s);
        }

        const auto left_index = static_cast<std::uint32_t>(nodes.size());
        nodes.push_back({});
        nodes.push_back({});
        auto& node = nodes[work.index];
        node.leaf = false;
        node.a = static_cast<std::uint16_t>(best_a);
        node.b = static_cast<std::uint16_t>(best_b);
        node.left = left_index;
        node.right = left_index + 1;
        queue.push_back({left_index, work.depth + 1, std::move(left_samples)});
        queue.push_back({left_index + 1, work.depth + 1, std::move(right_samples)});
    }
    return DecisionTree(std::move(nodes));
}

BitForest train_forest_for_bit(std::span<const Descriptor> data, std::span<const std::uint8_t> bit_column,
                               const ForestParams& params, std::size_t bit) {
    params.validate();
    if (data.empty()) throw DataError("forest training needs at least one sample");
    if (data.size() != bit_column.size()) throw DataError("descriptor and bit column lengths differ");

    const std::size_t n = data.size();
    const auto draws = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.bag_fraction * n)));
    BitForest forest;
    forest.trees.reserve(params.trees);
    for (int t = 0; t < params.trees; ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                          static_cast<std::uint32_t>(bit), static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
        std::vector<std::uint32_t> samples(draws);
        for (auto& s : samples) s = pick(rng);
        forest.trees.push_back(train_tree(data, bit_column, samples, params, rng));
    }
    return forest;
}

HashForest train_hash_forest(std::span<const Descriptor> data, const CodeMatrix& codes, const ForestParams& params) {
    params.validate();
    if (data.empty()) throw DataError("forest training needs at least one sample");
    if (codes.rows() != data.size()) throw DataError("code matrix rows do not match descriptor count");
    for (const auto& d : data)
        if (d.size() != data.front().size()) throw DataError("descriptors differ in length");

    std::vector<BitForest> forests(codes.bits());
    parallel_for(codes.bits(), [&](std::size_t bit) {
        const auto column = codes.column(bit);
        forests[bit] = train_forest_for_bit(data, column, params, bit);
    });
    return HashForest(data.front().size(), std::move(forests));
}

}  // namespace rth

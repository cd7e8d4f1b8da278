#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "rth/code_inference.hpp"
#include "rth/error.hpp"

using namespace rth;

namespace {

// Independent evaluation of the ordered-pair objective with the hinge
// written out directly.
double oracle_objective(const std::vector<std::uint8_t>& column, const std::vector<std::vector<int>>& prior,
                        const std::vector<int>& labels, int m) {
    const std::size_t n = labels.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            int d = 0;
            for (std::size_t r = 0; r < prior[i].size(); ++r) d += prior[i][r] != prior[j][r];
            d += column[i] != column[j];
            if (labels[i] == labels[j]) {
                total += static_cast<double>(d) * d;
            } else {
                const double gap = 0.5 * m - d;
                total += gap > 0 ? gap * gap : 0.0;
            }
        }
    return total;
}

std::vector<std::uint8_t> column_from_mask(unsigned mask, std::size_t n) {
    std::vector<std::uint8_t> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = (mask >> i) & 1U;
    return c;
}

double exhaustive_minimum(const CodeMatrix& codes, std::size_t bit, const SceneLabeling& labels, int m) {
    double best = 1e300;
    for (unsigned mask = 0; mask < (1U << labels.size()); ++mask)
        best = std::min(best, bit_objective(column_from_mask(mask, labels.size()), codes, bit, labels, m));
    return best;
}

SceneLabeling random_labels(std::size_t n, int scenes, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, scenes - 1);
    SceneLabeling l;
    for (std::size_t i = 0; i < n; ++i) l.labels.push_back(pick(rng));
    return l;
}

}  // namespace

TEST_CASE("pair_loss anchors") {
    CHECK(pair_loss(1, 1, true, 0, 64) == 0.0);
    CHECK(pair_loss(0, 0, false, 0, 64) == 1024.0);
    CHECK(pair_loss(0, 1, false, 40, 64) == 0.0);
    CHECK(pair_loss(1, 1, false, 40, 64) == 0.0);
    CHECK(pair_loss(0, 1, true, 2, 64) == 9.0);
}

TEST_CASE("pair_loss is zero exactly on satisfied pairs") {
    for (int m : {1, 2, 7, 64})
        for (int d = 0; d <= m; ++d)
            for (int bi : {0, 1})
                for (int bj : {0, 1})
                    for (bool same : {false, true}) {
                        const double loss = pair_loss(bi, bj, same, d, m);
                        const int D = d + (bi != bj);
                        CHECK(loss >= 0.0);
                        const bool satisfied = same ? D == 0 : D >= 0.5 * m;
                        CHECK((loss == 0.0) == satisfied);
                    }
}

TEST_CASE("bit_objective anchors") {
    SceneLabeling one{{3, 3, 3, 3}};
    CodeMatrix codes(4, 4);
    CHECK(bit_objective(std::vector<std::uint8_t>{1, 1, 1, 1}, codes, 0, one, 4) == 0.0);

    SceneLabeling two{{0, 1}};
    CodeMatrix pair(2, 2);
    CHECK(bit_objective(std::vector<std::uint8_t>{0, 1}, pair, 0, two, 2) == 0.0);
    CHECK(bit_objective(std::vector<std::uint8_t>{1, 1}, pair, 0, two, 2) == 2.0);
}

TEST_CASE("bit_objective equals the exhaustive double-sum oracle") {
    const SceneLabeling labels{{0, 0, 1, 1}};
    CodeMatrix codes(4, 4);
    for (unsigned mask = 0; mask < 16; ++mask) {
        const auto col = column_from_mask(mask, 4);
        CHECK(bit_objective(col, codes, 0, labels, 4) ==
              oracle_objective(col, {{}, {}, {}, {}}, labels.labels, 4));
    }
    // with one fixed prior column
    const std::vector<std::uint8_t> prior{0, 1, 1, 0};
    codes.set_column(0, prior);
    for (unsigned mask = 0; mask < 16; ++mask) {
        const auto col = column_from_mask(mask, 4);
        CHECK(bit_objective(col, codes, 1, labels, 4) ==
              oracle_objective(col, {{0}, {1}, {1}, {0}}, labels.labels, 4));
    }
}

TEST_CASE("code matrix prefix distance") {
    CodeMatrix c(3, 4);
    c.set_column(0, std::vector<std::uint8_t>{0, 1, 1});
    c.set_column(1, std::vector<std::uint8_t>{1, 1, 0});
    c.set_column(3, std::vector<std::uint8_t>{1, 0, 0});
    CHECK(c.prefix_distance(0, 1, 1) == 1);
    CHECK(c.prefix_distance(0, 1, 4) == 2);
    CHECK(c.prefix_distance(1, 0, 4) == 2);
    CHECK(c.prefix_distance(2, 2, 4) == 0);
    CHECK(c.prefix_distance(0, 2, 2) == 2);
    CHECK(c.row(0) == std::vector<std::uint8_t>{0, 1, 0, 1});
}

TEST_CASE("optimize_bit on a single scene converges to a uniform column") {
    const SceneLabeling labels{{5, 5, 5, 5, 5, 5, 5}};
    InferenceParams p;
    p.bits = 8;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        p.seed = seed;
        CodeMatrix codes(7, 8);
        BitReport report;
        const auto col = optimize_bit(codes, 0, labels, p, std::nullopt, &report);
        CHECK(std::all_of(col.begin(), col.end(), [&](auto b) { return b == col[0]; }));
        CHECK(report.final_objective == 0.0);
    }
}

TEST_CASE("optimize_bit leaves an optimal initial column unchanged") {
    const SceneLabeling labels{{0, 0, 0, 1, 1, 1}};
    InferenceParams p;
    p.bits = 1;
    CodeMatrix codes(6, 1);
    const std::vector<std::uint8_t> optimal{0, 0, 0, 1, 1, 1};
    CHECK(bit_objective(optimal, codes, 0, labels, 1) == exhaustive_minimum(codes, 0, labels, 1));
    BitReport report;
    const auto out = optimize_bit(codes, 0, labels, p, std::span<const std::uint8_t>(optimal), &report);
    CHECK(out == optimal);
    CHECK(report.sweeps == 1);
    CHECK(report.converged);
}

TEST_CASE("optimize_bit matches the 2^6 exhaustive optimum for most seeds") {
    const SceneLabeling labels{{0, 0, 0, 1, 1, 1}};
    CodeMatrix codes(6, 1);
    const double best = exhaustive_minimum(codes, 0, labels, 1);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        InferenceParams p;
        p.bits = 1;
        p.seed = seed;
        BitReport report;
        const auto col = optimize_bit(codes, 0, labels, p, std::nullopt, &report);
        CHECK(report.final_objective <= report.initial_objective);
        CHECK(report.final_objective == bit_objective(col, codes, 0, labels, 1));
        if (report.final_objective == best) ++hits;
    }
    CHECK(hits >= 90);
}

TEST_CASE("a uniform start column is a local trap on the balanced two-scene instance") {
    const SceneLabeling labels{{0, 0, 0, 1, 1, 1}};
    CodeMatrix codes(6, 1);
    InferenceParams p;
    p.bits = 1;
    const std::vector<std::uint8_t> zeros(6, 0);
    BitReport report;
    const auto out = optimize_bit(codes, 0, labels, p, std::span<const std::uint8_t>(zeros), &report);
    CHECK(out == zeros);
    CHECK(report.final_objective == doctest::Approx(4.5));
    CHECK(report.final_objective > exhaustive_minimum(codes, 0, labels, 1));
}

TEST_CASE("restarts keep the best of the independent descents") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 30; ++trial) {
        const SceneLabeling labels = random_labels(8, 2, rng);
        CodeMatrix codes(8, 1);
        InferenceParams p;
        p.bits = 1;
        p.seed = rng();
        p.restarts = 5;
        BitReport best;
        optimize_bit(codes, 0, labels, p, std::nullopt, &best);
        double lowest = 0.0;
        for (int k = 1; k <= 5; ++k) {
            InferenceParams q = p;
            q.restarts = k;
            BitReport r;
            optimize_bit(codes, 0, labels, q, std::nullopt, &r);
            if (k == 1) lowest = r.final_objective;
            lowest = std::min(lowest, r.final_objective);
            CHECK(r.final_objective == lowest);
        }
        CHECK(best.final_objective == lowest);
        CHECK(best.start >= 0);
        CHECK(best.start < 5);
    }
}

TEST_CASE("optimize_bit reaches a single-flip local optimum on small instances") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 3 + rng() % 6;  // 3..8
        const int m = 1 + static_cast<int>(rng() % 2);
        const SceneLabeling labels = random_labels(n, 3, rng);
        CodeMatrix codes(n, static_cast<std::size_t>(m));
        InferenceParams p;
        p.bits = m;
        p.seed = rng();
        p.sweeps = 100;
        for (std::size_t bit = 0; bit < static_cast<std::size_t>(m); ++bit) {
            const auto col = optimize_bit(codes, bit, labels, p);
            const double value = bit_objective(col, codes, bit, labels, m);
            CHECK(value >= exhaustive_minimum(codes, bit, labels, m));
            for (std::size_t i = 0; i < n; ++i) {
                auto flipped = col;
                flipped[i] ^= 1;
                CHECK(bit_objective(flipped, codes, bit, labels, m) >= value);
            }
            codes.set_column(bit, col);
        }
    }
}

TEST_CASE("sweep trace never increases") {
    std::mt19937_64 rng(123);
    for (int run = 0; run < 50; ++run) {
        const SceneLabeling labels = random_labels(40, 5, rng);
        InferenceParams p;
        p.bits = 16;
        p.seed = static_cast<std::uint64_t>(run);
        InferenceReport report;
        infer_codes(labels, p, &report);
        for (const auto& b : report.bits) {
            double prev = b.initial_objective;
            for (double v : b.trace) {
                CHECK(v <= prev);
                prev = v;
            }
            CHECK(b.final_objective == b.trace.back());
        }
    }
}

TEST_CASE("two scenes reach zero full-code loss with complementary codes") {
    SceneLabeling labels;
    for (int i = 0; i < 20; ++i) labels.labels.push_back(i < 10 ? 0 : 1);
    InferenceParams p;
    p.bits = 64;
    InferenceReport report;
    const CodeMatrix codes = infer_codes(labels, p, &report);
    CHECK(report.final_objective == 0.0);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 20; ++j) {
            const int d = codes.prefix_distance(i, j, 64);
            if (labels.same_scene(i, j))
                CHECK(d == 0);
            else
                CHECK(d >= 32);
        }

    // the complement construction attains zero loss, so zero is the optimum
    CodeMatrix complement(20, 64);
    for (std::size_t i = 10; i < 20; ++i)
        for (std::size_t r = 0; r < 64; ++r) complement.set(i, r, 1);
    CHECK(bit_objective(complement.column(63), complement, 63, labels, 64) == 0.0);
}

TEST_CASE("single scene yields identical rows") {
    const SceneLabeling labels{{2, 2, 2, 2, 2}};
    for (int m : {1, 5, 32}) {
        InferenceParams p;
        p.bits = m;
        p.seed = 17;
        const CodeMatrix codes = infer_codes(labels, p);
        for (std::size_t i = 1; i < 5; ++i) CHECK(codes.row(i) == codes.row(0));
    }
}

TEST_CASE("three scenes of five collapse within scene and separate across") {
    SceneLabeling labels;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < 5; ++i) labels.labels.push_back(s);
    InferenceParams p;
    p.bits = 64;
    p.seed = 5;
    const CodeMatrix codes = infer_codes(labels, p);
    double same_scene_loss = 0.0;
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t j = 0; j < 15; ++j)
            if (i != j && labels.same_scene(i, j)) {
                const double d = codes.prefix_distance(i, j, 64);
                same_scene_loss += d * d;
            }
    REQUIRE(same_scene_loss == 0.0);
    for (std::size_t i = 0; i < 15; ++i)
        for (std::size_t j = 0; j < 15; ++j)
            if (labels.same_scene(i, j)) CHECK(codes.prefix_distance(i, j, 64) == 0);
}

TEST_CASE("infer_codes is deterministic and label-permutation invariant") {
    std::mt19937_64 rng(4);
    const SceneLabeling labels = random_labels(30, 4, rng);
    InferenceParams p;
    p.bits = 24;
    p.seed = 77;
    const CodeMatrix a = infer_codes(labels, p);
    const CodeMatrix b = infer_codes(labels, p);
    CHECK(a == b);

    SceneLabeling renamed = labels;
    const std::vector<int> perm{31, -4, 8, 1000};
    for (auto& l : renamed.labels) l = perm[static_cast<std::size_t>(l)];
    CHECK(infer_codes(renamed, p) == a);

    p.seed = 78;
    CHECK_FALSE(infer_codes(labels, p) == a);
}

TEST_CASE("pair budget samples cross-scene pairs and keeps every same-scene pair") {
    SceneLabeling labels;
    for (int i = 0; i < 60; ++i) labels.labels.push_back(i % 6);
    InferenceParams p;
    p.bits = 8;
    p.pair_budget = 200;
    InferenceReport report;
    const CodeMatrix codes = infer_codes(labels, p, &report);
    const std::uint64_t same_pairs = 6 * (10 * 9 / 2);
    CHECK(report.pairs_used == same_pairs + 200);
    CHECK(codes.rows() == 60);

    InferenceReport again;
    CHECK(infer_codes(labels, p, &again) == codes);

    // budget above the cross-pair count means exact mode
    p.pair_budget = 1'000'000;
    InferenceReport exact;
    infer_codes(labels, p, &exact);
    CHECK(exact.pairs_used == 60 * 59 / 2);
}

TEST_CASE("infer_codes input validation") {
    InferenceParams p;
    CHECK_THROWS_AS(infer_codes(SceneLabeling{{1}}, p), DataError);
    p.bits = 0;
    CHECK_THROWS_AS(infer_codes(SceneLabeling{{1, 2}}, p), ConfigError);
    p.bits = 4;
    p.sweeps = 0;
    CHECK_THROWS_AS(infer_codes(SceneLabeling{{1, 2}}, p), ConfigError);
}

TEST_CASE("infer_codes report sums per-bit objectives") {
    SceneLabeling labels{{0, 0, 1, 1, 2, 2}};
    InferenceParams p;
    p.bits = 6;
    InferenceReport report;
    infer_codes(labels, p, &report);
    REQUIRE(report.bits.size() == 6);
    double sum = 0.0;
    for (const auto& b : report.bits) sum += b.final_objective;
    CHECK(report.objective_sum == sum);
    CHECK(report.final_objective == report.bits.back().final_objective);
}

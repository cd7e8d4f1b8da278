#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <string>

#include "rth/binary_code.hpp"
#include "rth/error.hpp"
#include "rth/index_store.hpp"
#include "test_support.hpp"

using namespace rth;

namespace {

DecisionTree stump(double alpha) { return DecisionTree({TreeNode{true, 0, 0, 0, 0, alpha}}); }

// Model whose forests are placeholders; only the entry table matters.
RetargetModel code_model(std::size_t bits, const std::vector<std::string>& codes) {
    RetargetModel m;
    m.pyramid.canonical_size = 24;
    m.pyramid.levels = {{1, 24, false}};
    m.inference.bits = static_cast<int>(bits);
    std::vector<BitForest> forests(bits, BitForest{{stump(0.0)}});
    m.hash = HashForest(m.pyramid.descriptor_length(), std::move(forests));
    for (std::size_t i = 0; i < codes.size(); ++i)
        m.add_entry(BinaryCode::from_string(codes[i]), "v", static_cast<std::int32_t>(i), static_cast<std::int32_t>(i));
    return m;
}

int oracle_hamming(const std::string& a, const std::string& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

std::string random_bits(std::size_t n, std::mt19937_64& rng) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back((rng() & 1U) ? '1' : '0');
    return s;
}

std::vector<std::uint8_t> quantized_texture(std::mt19937_64& rng, GrayImage* decoded) {
    const GrayImage tex = test::smooth_texture(192, 192, 16, rng);
    const auto bytes = encode_pgm(tex);
    *decoded = decode_image(bytes);
    return bytes;
}

// Real model over a few textures: descriptors, random codes, trained forests.
RetargetModel textured_model(std::vector<std::vector<std::uint8_t>>* image_bytes) {
    std::mt19937_64 rng(2024);
    RetargetModel m;
    m.inference.bits = 24;
    m.forest.trees = 4;
    m.forest.candidate_pairs = 16;
    m.config_echo = R"({"note":"test"})";
    std::vector<Descriptor> descs;
    for (int i = 0; i < 12; ++i) {
        GrayImage img;
        image_bytes->push_back(quantized_texture(rng, &img));
        descs.push_back(extract(img, m.pyramid));
    }
    CodeMatrix codes(descs.size(), 24);
    for (std::size_t i = 0; i < descs.size(); ++i)
        for (std::size_t b = 0; b < 24; ++b) codes.set(i, b, rng() & 1U);
    m.hash = train_hash_forest(descs, codes, m.forest);
    for (std::size_t i = 0; i < descs.size(); ++i)
        m.add_entry(m.hash.encode(descs[i]), "vid" + std::to_string(i % 3), static_cast<std::int32_t>(i),
                    static_cast<std::int32_t>(i / 2));
    return m;
}

FormatError::Kind load_failure(std::span<const std::uint8_t> bytes) {
    try {
        deserialize(bytes);
    } catch (const FormatError& e) {
        return e.kind();
    }
    FAIL("deserialize accepted corrupt bytes");
    return FormatError::Kind::Malformed;
}

}  // namespace

TEST_CASE("hamming anchor") {
    // 0b10110 against 0b00111, written least significant bit first
    CHECK(hamming(BinaryCode::from_string("01101"), BinaryCode::from_string("11100")) == 2);
    CHECK(hamming(BinaryCode(64), BinaryCode(64)) == 0);
    CHECK_THROWS_AS(hamming(BinaryCode(4), BinaryCode(5)), DataError);
    CHECK_THROWS_AS(BinaryCode::from_string("01x"), DataError);
}

TEST_CASE("hamming is a metric that agrees with a character count") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        const auto sa = random_bits(n, rng);
        const auto sb = random_bits(n, rng);
        const auto sc = random_bits(n, rng);
        const auto a = BinaryCode::from_string(sa);
        const auto b = BinaryCode::from_string(sb);
        const auto c = BinaryCode::from_string(sc);
        CHECK(a.to_string() == sa);
        CHECK(hamming(a, b) == oracle_hamming(sa, sb));
        CHECK(hamming(a, a) == 0);
        CHECK(hamming(a, b) == hamming(b, a));
        CHECK(hamming(a, c) <= hamming(a, b) + hamming(b, c));
        CHECK(hamming(a, b) >= 0);
        CHECK(hamming(a, b) <= static_cast<int>(n));
    }
}

TEST_CASE("search ranks by distance") {
    const auto m = code_model(4, {"0000", "1111"});
    const auto r = search(m, BinaryCode::from_string("0001"), 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Neighbor{0, 1, 0});
    CHECK(r[1] == Neighbor{1, 3, 1});
}

TEST_CASE("search breaks distance ties by ascending id") {
    const auto m = code_model(4, {"1100", "0011", "1000", "0100", "1100"});
    const auto r = search(m, BinaryCode::from_string("0000"), 5);
    REQUIRE(r.size() == 5);
    CHECK(r[0].id == 2);
    CHECK(r[1].id == 3);
    CHECK(r[2].id == 0);
    CHECK(r[3].id == 1);
    CHECK(r[4].id == 4);
    const auto top3 = search(m, BinaryCode::from_string("0000"), 3);
    CHECK(std::equal(top3.begin(), top3.end(), r.begin()));
}

TEST_CASE("search k bounds") {
    const auto m = code_model(4, {"0000", "1111", "0101"});
    CHECK(search(m, BinaryCode(4), 50).size() == 3);
    CHECK(search(m, BinaryCode(4), 0).empty());
    CHECK_THROWS_AS(search(m, BinaryCode(5), 1), DataError);
    const auto empty = code_model(4, {});
    CHECK_THROWS_AS(search(empty, BinaryCode(4), 1), DataError);
}

TEST_CASE("search matches a brute-force sort on random indexes") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t bits = 1 + rng() % 130;
        std::vector<std::string> codes;
        const std::size_t n = 1 + rng() % 120;
        for (std::size_t i = 0; i < n; ++i) codes.push_back(random_bits(bits, rng));
        const auto m = code_model(bits, codes);
        const auto q = random_bits(bits, rng);
        std::vector<std::pair<int, std::uint32_t>> expected;
        for (std::size_t i = 0; i < n; ++i)
            expected.emplace_back(oracle_hamming(q, codes[i]), static_cast<std::uint32_t>(i));
        std::sort(expected.begin(), expected.end());
        const std::size_t k = rng() % (n + 5);
        const auto got = search(m, BinaryCode::from_string(q), k);
        REQUIRE(got.size() == std::min(k, n));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].distance == expected[i].first);
            CHECK(got[i].id == expected[i].second);
        }
    }
}

TEST_CASE("add_entry assigns dense ids and checks code length") {
    auto m = code_model(4, {});
    CHECK(m.add_entry(BinaryCode(4), "a", 0, 1) == 0);
    CHECK(m.add_entry(BinaryCode(4), "a", 1, 1) == 1);
    CHECK_THROWS_AS(m.add_entry(BinaryCode(3), "a", 2, 1), DataError);
}

TEST_CASE("querying an indexed image returns it at distance zero") {
    std::vector<std::vector<std::uint8_t>> images;
    const RetargetModel m = textured_model(&images);
    for (std::size_t i = 0; i < images.size(); ++i) {
        QueryOptions opt;
        opt.k = 3;
        const QueryResult r = query(m, images[i], opt);
        REQUIRE(r.neighbors.size() == 3);
        CHECK(r.neighbors[0].distance == 0);
        // an identical code may sit at a lower id; the entry itself must be at distance 0
        const auto all = search(m, m.entries[i].code, m.entries.size());
        CHECK(std::any_of(all.begin(), all.end(), [&](const Neighbor& n) { return n.id == i && n.distance == 0; }));
        CHECK(r.timing.descriptor_us >= 0.0);
        CHECK(r.timing.encode_us >= 0.0);
        CHECK(r.timing.search_us >= 0.0);
        CHECK(r.timing.total_us() == doctest::Approx(r.timing.descriptor_us + r.timing.encode_us + r.timing.search_us));
        const auto j = to_json(r);
        CHECK(j["results"].size() == 3);
        CHECK(j["results"][0]["distance"] == 0);
        CHECK(j["timing_us"].contains("total"));
    }
}

TEST_CASE("query rejects undecodable bytes") {
    std::vector<std::vector<std::uint8_t>> images;
    const RetargetModel m = textured_model(&images);
    const std::vector<std::uint8_t> junk{'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'g'};
    CHECK_THROWS_AS(query(m, junk, QueryOptions{}), DataError);
}

TEST_CASE("model round trip preserves everything") {
    std::vector<std::vector<std::uint8_t>> images;
    RetargetModel m = textured_model(&images);
    m.inference.pair_budget = 777;
    m.inference.seed = 12345678901234ULL;
    m.forest.min_gain = 0.125;
    const auto bytes = serialize(m);
    const RetargetModel back = deserialize(bytes);
    CHECK(back == m);
    CHECK(serialize(back) == bytes);

    const auto dir = test::scratch_dir("roundtrip");
    save(m, dir / "m.rth");
    CHECK(test::slurp(dir / "m.rth") == bytes);
    CHECK(load(dir / "m.rth") == m);
    CHECK_FALSE(std::filesystem::exists(dir / "m.rth.tmp"));

    for (std::size_t i = 0; i < images.size(); ++i) {
        QueryOptions opt;
        opt.k = 5;
        CHECK(query(back, images[i], opt).neighbors == query(m, images[i], opt).neighbors);
    }
}

TEST_CASE("model loading rejects corrupt files") {
    std::vector<std::vector<std::uint8_t>> images;
    const RetargetModel m = textured_model(&images);
    const auto bytes = serialize(m);

    SUBCASE("bad magic") {
        auto b = bytes;
        b[0] = 'X';
        CHECK(load_failure(b) == FormatError::Kind::BadMagic);
    }
    SUBCASE("unsupported version") {
        auto b = bytes;
        b[4] = 2;
        CHECK(load_failure(b) == FormatError::Kind::UnsupportedVersion);
    }
    SUBCASE("truncated inside the forest section") {
        // section table: 8-byte header, then (tag, offset, size) records
        std::uint64_t forest_offset = 0;
        for (int i = 0; i < 8; ++i) forest_offset |= std::uint64_t{bytes[8 + 20 + 4 + i]} << (8 * i);
        std::vector<std::uint8_t> b(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(forest_offset + 50));
        CHECK(load_failure(b) == FormatError::Kind::Truncated);
        CHECK(load_failure(std::span(bytes).first(3)) == FormatError::Kind::Truncated);
        CHECK(load_failure(std::span(bytes).first(10)) == FormatError::Kind::Truncated);
    }
    SUBCASE("flipped payload byte") {
        auto b = bytes;
        b[b.size() / 2] ^= 0x40;
        CHECK(load_failure(b) == FormatError::Kind::ChecksumMismatch);
    }
    SUBCASE("flipped checksum byte") {
        auto b = bytes;
        b.back() ^= 1;
        CHECK(load_failure(b) == FormatError::Kind::ChecksumMismatch);
    }
    SUBCASE("trailing garbage") {
        auto b = bytes;
        b.push_back(0);
        CHECK(load_failure(b) == FormatError::Kind::Malformed);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load(test::scratch_dir("missing") / "nope.rth"), IoError);
    }
}

TEST_CASE("serialize refuses inconsistent models") {
    auto m = code_model(4, {"0000"});
    m.inference.bits = 5;
    CHECK_THROWS_AS(serialize(m), DataError);
    auto n = code_model(4, {"0000"});
    n.entries[0].id = 3;
    CHECK_THROWS_AS(serialize(n), DataError);
}

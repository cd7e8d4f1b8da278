#include "rth/index_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstring>
#include <fstream>
#include <system_error>

#include <zlib.h>

#include "rth/error.hpp"

namespace rth {

std::uint32_t RetargetModel::add_entry(BinaryCode code, std::string video_id, std::int32_t frame_idx,
                                       std::int32_t scene_id) {
    if (code.size() != bits()) throw DataError("entry code length does not match model");
    const auto id = static_cast<std::uint32_t>(entries.size());
    entries.push_back({id, std::move(code), std::move(video_id), frame_idx, scene_id});
    return id;
}

void RetargetModel::validate() const {
    if (hash.bits() == 0) throw DataError("model has no hash forests");
    if (static_cast<int>(hash.bits()) != inference.bits) throw DataError("forest count does not match code length");
    if (hash.descriptor_length() != pyramid.descriptor_length())
        throw DataError("forest descriptor length does not match pyramid configuration");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].id != i) throw DataError("entry ids are not dense from 0");
        if (entries[i].code.size() != hash.bits()) throw DataError("entry code length does not match model");
    }
}

std::vector<Neighbor> search(const RetargetModel& model, const BinaryCode& code, std::size_t k) {
    if (model.entries.empty()) throw DataError("index is empty");
    if (code.size() != model.bits()) throw DataError("query code length does not match model");
    k = std::min(k, model.entries.size());
    std::vector<Neighbor> best;
    if (k == 0) return best;
    best.reserve(k);

    const auto ranks_before = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    };
    // max-heap on (distance, id): front is the current k-th best
    for (const auto& e : model.entries) {
        const int d = hamming(code, e.code);
        if (best.size() < k) {
            best.push_back({e.id, d, e.scene_id});
            std::push_heap(best.begin(), best.end(), ranks_before);
        } else if (d < best.front().distance) {
            std::pop_heap(best.begin(), best.end(), ranks_before);
            best.back() = {e.id, d, e.scene_id};
            std::push_heap(best.begin(), best.end(), ranks_before);
        }
    }
    std::sort_heap(best.begin(), best.end(), ranks_before);
    return best;
}

QueryResult query(const RetargetModel& model, std::span<const std::uint8_t> image_bytes,
                  const QueryOptions& options) {
    using clock = std::chrono::steady_clock;
    const auto micros = [](clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); };
    if (model.entries.empty()) throw DataError("index is empty");

    QueryResult result;
    const auto t0 = clock::now();
    const GrayImage img =
        load_and_prepare(image_bytes, options.crop, model.pyramid.canonical_size, options.rotation_degrees);
    const Descriptor d = extract(img, model.pyramid);
    const auto t1 = clock::now();
    const BinaryCode code = model.hash.encode(d);
    const auto t2 = clock::now();
    result.neighbors = search(model, code, options.k);
    const auto t3 = clock::now();

    result.timing = {micros(t1 - t0), micros(t2 - t1), micros(t3 - t2)};
    return result;
}

nlohmann::json to_json(const QueryResult& result) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& n : result.neighbors)
        ranking.push_back({{"id", n.id}, {"distance", n.distance}, {"scene_id", n.scene_id}});
    return {{"results", ranking},
            {"timing_us",
             {{"descriptor", result.timing.descriptor_us},
              {"encode", result.timing.encode_us},
              {"search", result.timing.search_us},
              {"total", result.timing.total_us()}}}};
}

namespace {

constexpr std::array<char, 4> kMagic{'R', 'T', 'H', '1'};
constexpr std::uint32_t tag(const char (&s)[5]) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}
constexpr std::uint32_t kConfigTag = tag("CONF");
constexpr std::uint32_t kForestTag = tag("FRST");
constexpr std::uint32_t kEntriesTag = tag("ENTR");
constexpr std::size_t kHeaderSize = 8;
constexpr std::size_t kTableEntrySize = 20;
constexpr std::size_t kNodeRecordSize = 21;

class ByteWriter {
public:
    template <class T>
    void put(T value) {
        static_assert(std::is_integral_v<T>);
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put_string(const std::string& s) {
        put(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void append(std::span<const std::uint8_t> b) { bytes_.insert(bytes_.end(), b.begin(), b.end()); }
    std::size_t size() const noexcept { return bytes_.size(); }
    std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

// Reads a bounded section; running past the end is a malformed section
// because section bounds were already checked against the file size.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes, FormatError::Kind overrun = FormatError::Kind::Malformed)
        : bytes_(bytes), overrun_(overrun) {}

    template <class T>
    T get() {
        static_assert(std::is_integral_v<T>);
        need(sizeof(T));
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string get_string() {
        const auto len = get<std::uint32_t>();
        need(len);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError(overrun_, "model section ends unexpectedly");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    FormatError::Kind overrun_;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_config(const RetargetModel& m) {
    ByteWriter w;
    w.put(static_cast<std::uint32_t>(m.pyramid.canonical_size));
    w.put(static_cast<std::uint32_t>(m.pyramid.stride_regions));
    w.put(static_cast<std::uint32_t>(m.pyramid.levels.size()));
    for (const auto& l : m.pyramid.levels) {
        w.put(static_cast<std::uint32_t>(l.grid));
        w.put(static_cast<std::uint32_t>(l.patch_px));
        w.put(static_cast<std::uint8_t>(l.overlapped ? 1 : 0));
    }
    w.put(static_cast<std::uint32_t>(m.inference.bits));
    w.put(static_cast<std::uint32_t>(m.inference.sweeps));
    w.put(static_cast<std::uint32_t>(m.inference.restarts));
    w.put(m.inference.seed);
    w.put(static_cast<std::uint8_t>(m.inference.pair_budget ? 1 : 0));
    w.put(m.inference.pair_budget.value_or(0));
    w.put(static_cast<std::uint32_t>(m.forest.trees));
    w.put(static_cast<std::uint32_t>(m.forest.max_depth));
    w.put_f64(m.forest.min_gain);
    w.put(static_cast<std::uint32_t>(m.forest.candidate_pairs));
    w.put_f64(m.forest.bag_fraction);
    w.put(m.forest.seed);
    w.put_string(m.config_echo);
    return std::move(w.bytes());
}

void decode_config(std::span<const std::uint8_t> bytes, RetargetModel& m) {
    ByteReader r(bytes);
    m.pyramid.canonical_size = static_cast<int>(r.get<std::uint32_t>());
    m.pyramid.stride_regions = static_cast<int>(r.get<std::uint32_t>());
    const auto levels = r.get<std::uint32_t>();
    if (levels > 64) throw FormatError(FormatError::Kind::Malformed, "implausible pyramid level count");
    m.pyramid.levels.clear();
    for (std::uint32_t i = 0; i < levels; ++i) {
        PyramidLevel l;
        l.grid = static_cast<int>(r.get<std::uint32_t>());
        l.patch_px = static_cast<int>(r.get<std::uint32_t>());
        l.overlapped = r.get<std::uint8_t>() != 0;
        m.pyramid.levels.push_back(l);
    }
    m.inference.bits = static_cast<int>(r.get<std::uint32_t>());
    m.inference.sweeps = static_cast<int>(r.get<std::uint32_t>());
    m.inference.restarts = static_cast<int>(r.get<std::uint32_t>());
    m.inference.seed = r.get<std::uint64_t>();
    const bool has_budget = r.get<std::uint8_t>() != 0;
    const auto budget = r.get<std::uint64_t>();
    m.inference.pair_budget = has_budget ? std::optional<std::uint64_t>(budget) : std::nullopt;
    m.forest.trees = static_cast<int>(r.get<std::uint32_t>());
    m.forest.max_depth = static_cast<int>(r.get<std::uint32_t>());
    m.forest.min_gain = r.get_f64();
    m.forest.candidate_pairs = static_cast<int>(r.get<std::uint32_t>());
    m.forest.bag_fraction = r.get_f64();
    m.forest.seed = r.get<std::uint64_t>();
    m.config_echo = r.get_string();
    if (!r.done()) throw FormatError(FormatError::Kind::Malformed, "trailing bytes in config section");
}

std::vector<std::uint8_t> encode_forests(const HashForest& hash) {
    ByteWriter w;
    w.put(static_cast<std::uint32_t>(hash.bits()));
    w.put(static_cast<std::uint32_t>(hash.descriptor_length()));
    for (const auto& forest : hash.forests()) {
        w.put(static_cast<std::uint32_t>(forest.trees.size()));
        for (const auto& tree : forest.trees) {
            w.put(static_cast<std::uint32_t>(tree.nodes().size()));
            for (const auto& n : tree.nodes()) {
                w.put(static_cast<std::uint8_t>(n.leaf ? 1 : 0));
                w.put(n.a);
                w.put(n.b);
                w.put(n.left);
                w.put(n.right);
                w.put_f64(n.alpha);
            }
        }
    }
    return std::move(w.bytes());
}

HashForest decode_forests(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto bits = r.get<std::uint32_t>();
    const auto length = r.get<std::uint32_t>();
    std::vector<BitForest> forests(bits);
    for (auto& forest : forests) {
        const auto trees = r.get<std::uint32_t>();
        if (trees == 0) throw FormatError(FormatError::Kind::Malformed, "forest without trees");
        forest.trees.reserve(std::min<std::uint32_t>(trees, 4096));
        for (std::uint32_t t = 0; t < trees; ++t) {
            const auto count = r.get<std::uint32_t>();
            if (static_cast<std::uint64_t>(count) * kNodeRecordSize > bytes.size())
                throw FormatError(FormatError::Kind::Malformed, "implausible node count");
            std::vector<TreeNode> nodes(count);
            for (auto& n : nodes) {
                n.leaf = r.get<std::uint8_t>() != 0;
                n.a = r.get<std::uint16_t>();
                n.b = r.get<std::uint16_t>();
                n.left = r.get<std::uint32_t>();
                n.right = r.get<std::uint32_t>();
                n.alpha = r.get_f64();
                if (!n.leaf && (n.a >= length || n.b >= length))
                    throw FormatError(FormatError::Kind::Malformed, "split index outside descriptor");
            }
            try {
                forest.trees.emplace_back(std::move(nodes));
            } catch (const DataError& e) {
                throw FormatError(FormatError::Kind::Malformed, e.what());
            }
        }
    }
    if (!r.done()) throw FormatError(FormatError::Kind::Malformed, "trailing bytes in forest section");
    return HashForest(length, std::move(forests));
}

std::vector<std::uint8_t> encode_entries(const RetargetModel& m) {
    ByteWriter w;
    const auto words = static_cast<std::uint32_t>((m.bits() + 63) / 64);
    w.put(static_cast<std::uint32_t>(m.entries.size()));
    w.put(static_cast<std::uint32_t>(m.bits()));
    w.put(words);
    for (const auto& e : m.entries) {
        w.put(e.id);
        w.put(e.frame_idx);
        w.put(e.scene_id);
        w.put_string(e.video_id);
        for (auto word : e.code.words()) w.put(word);
    }
    return std::move(w.bytes());
}

std::vector<IndexEntry> decode_entries(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto count = r.get<std::uint32_t>();
    const auto bits = r.get<std::uint32_t>();
    const auto words = r.get<std::uint32_t>();
    if (words != (bits + 63) / 64) throw FormatError(FormatError::Kind::Malformed, "code word count mismatch");
    if (static_cast<std::uint64_t>(count) * (16 + 8ULL * words) > bytes.size())
        throw FormatError(FormatError::Kind::Malformed, "implausible entry count");
    std::vector<IndexEntry> entries(count);
    for (auto& e : entries) {
        e.id = r.get<std::uint32_t>();
        e.frame_idx = r.get<std::int32_t>();
        e.scene_id = r.get<std::int32_t>();
        e.video_id = r.get_string();
        e.code = BinaryCode(bits);
        for (auto& word : e.code.words()) word = r.get<std::uint64_t>();
        if (bits % 64 != 0 && (e.code.words().back() >> (bits % 64)) != 0)
            throw FormatError(FormatError::Kind::Malformed, "code has bits set past its length");
    }
    if (!r.done()) throw FormatError(FormatError::Kind::Malformed, "trailing bytes in entry section");
    return entries;
}

}  // namespace

std::vector<std::uint8_t> serialize(const RetargetModel& model) {
    model.validate();
    const std::array<std::pair<std::uint32_t, std::vector<std::uint8_t>>, 3> sections{{
        {kConfigTag, encode_config(model)},
        {kForestTag, encode_forests(model.hash)},
        {kEntriesTag, encode_entries(model)},
    }};

    ByteWriter w;
    for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
    w.put(kModelFormatVersion);
    w.put(static_cast<std::uint16_t>(sections.size()));
    std::uint64_t offset = kHeaderSize + kTableEntrySize * sections.size();
    for (const auto& [id, payload] : sections) {
        w.put(id);
        w.put(offset);
        w.put(static_cast<std::uint64_t>(payload.size()));
        offset += payload.size();
    }
    for (const auto& [id, payload] : sections) w.append(payload);
    w.put(crc32_of(w.bytes()));
    return std::move(w.bytes());
}

RetargetModel deserialize(std::span<const std::uint8_t> bytes) {
    using Kind = FormatError::Kind;
    if (bytes.size() < kMagic.size()) throw FormatError(Kind::Truncated, "model file too short");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
        throw FormatError(Kind::BadMagic, "not a model file (bad magic)");

    ByteReader header(bytes.subspan(kMagic.size()), Kind::Truncated);
    const auto version = header.get<std::uint16_t>();
    if (version != kModelFormatVersion)
        throw FormatError(Kind::UnsupportedVersion, "unsupported model format version " + std::to_string(version));
    const auto section_count = header.get<std::uint16_t>();

    struct Section {
        std::uint32_t id;
        std::uint64_t offset;
        std::uint64_t size;
    };
    std::vector<Section> table(section_count);
    std::uint64_t end = kHeaderSize + kTableEntrySize * section_count;
    for (auto& s : table) {
        s.id = header.get<std::uint32_t>();
        s.offset = header.get<std::uint64_t>();
        s.size = header.get<std::uint64_t>();
        if (s.offset != end || s.size > (std::uint64_t{1} << 40))
            throw FormatError(Kind::Malformed, "section table is not contiguous");
        end = s.offset + s.size;
    }
    if (bytes.size() < end + 4) throw FormatError(Kind::Truncated, "model file is truncated");
    if (bytes.size() > end + 4) throw FormatError(Kind::Malformed, "trailing bytes after checksum");

    const auto body = bytes.first(end);
    ByteReader trailer(bytes.subspan(end));
    if (trailer.get<std::uint32_t>() != crc32_of(body))
        throw FormatError(Kind::ChecksumMismatch, "model checksum mismatch");

    RetargetModel model;
    bool have_config = false, have_forests = false, have_entries = false;
    for (const auto& s : table) {
        const auto payload = bytes.subspan(s.offset, s.size);
        if (s.id == kConfigTag && !have_config) {
            decode_config(payload, model);
            have_config = true;
        } else if (s.id == kForestTag && !have_forests) {
            model.hash = decode_forests(payload);
            have_forests = true;
        } else if (s.id == kEntriesTag && !have_entries) {
            model.entries = decode_entries(payload);
            have_entries = true;
        } else {
            throw FormatError(Kind::Malformed, "unknown or duplicate section");
        }
    }
    if (!(have_config && have_forests && have_entries)) throw FormatError(Kind::Malformed, "missing section");
    try {
        model.pyramid.validate();
        model.inference.validate();
        model.forest.validate();
        model.validate();
    } catch (const Error& e) {
        throw FormatError(Kind::Malformed, std::string("inconsistent model: ") + e.what());
    }
    return model;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save(const RetargetModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize(model));
}

RetargetModel load(const std::filesystem::path& path) { return deserialize(read_file_bytes(path)); }

}  // namespace rth

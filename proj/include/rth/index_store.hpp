#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rth/binary_code.hpp"
#include "rth/code_inference.hpp"
#include "rth/descriptor.hpp"
#include "rth/forest.hpp"
#include "rth/image.hpp"

namespace rth {

struct IndexEntry {
    std::uint32_t id = 0;
    BinaryCode code;
    std::string video_id;
    std::int32_t frame_idx = 0;
    std::int32_t scene_id = 0;

    bool operator==(const IndexEntry&) const = default;
};

// Everything produced by training: settings, hash functions and the coded
// training images.
struct RetargetModel {
    PyramidConfig pyramid;
    InferenceParams inference;
    ForestParams forest;
    HashForest hash;
    std::vector<IndexEntry> entries;
    std::string config_echo;  // JSON text of the full effective run configuration

    std::size_t bits() const noexcept { return hash.bits(); }

    // Appends an entry with the next dense id and returns that id.
    std::uint32_t add_entry(BinaryCode code, std::string video_id, std::int32_t frame_idx, std::int32_t scene_id);

    // Throws DataError when entries and forests disagree.
    void validate() const;

    bool operator==(const RetargetModel&) const = default;
};

struct Neighbor {
    std::uint32_t id = 0;
    int distance = 0;
    std::int32_t scene_id = 0;

    bool operator==(const Neighbor&) const = default;
};

struct QueryTiming {
    double descriptor_us = 0.0;  // decode, prepare and extract
    double encode_us = 0.0;
    double search_us = 0.0;

    double total_us() const noexcept { return descriptor_us + encode_us + search_us; }
};

struct QueryResult {
    std::vector<Neighbor> neighbors;  // ascending (distance, id)
    QueryTiming timing;
};

// Linear popcount scan keeping the k best entries by (distance, id).
std::vector<Neighbor> search(const RetargetModel& model, const BinaryCode& code, std::size_t k);

struct QueryOptions {
    std::size_t k = 10;
    std::optional<CropRect> crop;
    double rotation_degrees = 0.0;
};

QueryResult query(const RetargetModel& model, std::span<const std::uint8_t> image_bytes,
                  const QueryOptions& options);

nlohmann::json to_json(const QueryResult& result);

// Binary model file; layout documented in docs/model_format.md.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize(const RetargetModel& model);
RetargetModel deserialize(std::span<const std::uint8_t> bytes);

// Writes through a temporary file and renames it into place.
void save(const RetargetModel& model, const std::filesystem::path& path);
RetargetModel load(const std::filesystem::path& path);

// Atomic write of an arbitrary byte buffer (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rth

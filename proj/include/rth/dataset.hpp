#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rth/image.hpp"

namespace rth {

struct ManifestRecord {
    std::string path;  // as written in the manifest
    std::filesystem::path resolved_path;  // relative paths resolve against the manifest's directory
    std::string video_id;
    int frame_idx = 0;
    std::optional<int> scene_label;
    std::optional<CropRect> crop;
    double rotation = 0.0;  // degrees, applied after crop

    bool operator==(const ManifestRecord&) const = default;
};

enum class ManifestRole { Train, Test };

struct DatasetManifest {
    ManifestRole role = ManifestRole::Train;
    std::vector<ManifestRecord> records;

    bool fully_labeled() const;
    // Throws DataError on duplicate (video_id, frame_idx).
    void validate() const;
};

// JSON-lines: one object per line with path, video_id, frame_idx and the
// optional scene_label, crop {x, y, width, height} and rotation fields.
DatasetManifest read_manifest(const std::filesystem::path& path, ManifestRole role);
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, ManifestRole role);
std::string format_manifest(const DatasetManifest& manifest);

nlohmann::json to_json(const ManifestRecord& record);

// Duplicates every record once per angle. Non-zero angles get a rotated
// copy whose video id is suffixed "#rot<angle>"; labels are inherited.
DatasetManifest augment_rotations(const DatasetManifest& manifest, const std::vector<double>& angles,
                                  bool allow_resampled = false);

GrayImage load_record(const ManifestRecord& record, int canonical_size);

}  // namespace rth

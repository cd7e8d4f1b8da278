#include "rth/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rth/error.hpp"

namespace rth {

bool DatasetManifest::fully_labeled() const {
    for (const auto& r : records)
        if (!r.scene_label) return false;
    return true;
}

void DatasetManifest::validate() const {
    std::set<std::pair<std::string, int>> seen;
    for (const auto& r : records)
        if (!seen.emplace(r.video_id, r.frame_idx).second)
            throw DataError("duplicate frame " + std::to_string(r.frame_idx) + " in video '" + r.video_id + "'");
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, ManifestRole role) {
    DatasetManifest manifest;
    manifest.role = role;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestRecord r;
            r.path = j.at("path").get<std::string>();
            r.resolved_path = std::filesystem::path(r.path).is_absolute() ? std::filesystem::path(r.path)
                                                                          : base_dir / r.path;
            r.video_id = j.at("video_id").get<std::string>();
            r.frame_idx = j.at("frame_idx").get<int>();
            if (j.contains("scene_label") && !j.at("scene_label").is_null())
                r.scene_label = j.at("scene_label").get<int>();
            if (j.contains("crop") && !j.at("crop").is_null()) {
                const auto& c = j.at("crop");
                r.crop = CropRect{c.at("x").get<int>(), c.at("y").get<int>(), c.at("width").get<int>(),
                                  c.at("height").get<int>()};
            }
            r.rotation = j.value("rotation", 0.0);
            manifest.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    manifest.validate();
    return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& path, ManifestRole role) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_manifest(buffer.str(), path.parent_path(), role);
}

nlohmann::json to_json(const ManifestRecord& r) {
    nlohmann::json j{{"path", r.path}, {"video_id", r.video_id}, {"frame_idx", r.frame_idx}};
    if (r.scene_label) j["scene_label"] = *r.scene_label;
    if (r.crop) j["crop"] = {{"x", r.crop->x}, {"y", r.crop->y}, {"width", r.crop->width}, {"height", r.crop->height}};
    if (r.rotation != 0.0) j["rotation"] = r.rotation;
    return j;
}

std::string format_manifest(const DatasetManifest& manifest) {
    std::string out;
    for (const auto& r : manifest.records) out += to_json(r).dump() + "\n";
    return out;
}

DatasetManifest augment_rotations(const DatasetManifest& manifest, const std::vector<double>& angles,
                                  bool allow_resampled) {
    if (angles.empty()) throw ConfigError("rotation augmentation needs at least one angle");
    for (double a : angles) {
        const double turns = a / 90.0;
        if (!allow_resampled && turns != std::floor(turns))
            throw ConfigError("rotation " + std::to_string(a) + " is not a multiple of 90 degrees");
    }
    DatasetManifest out;
    out.role = manifest.role;
    out.records.reserve(manifest.records.size() * angles.size());
    for (double a : angles) {
        for (const auto& r : manifest.records) {
            ManifestRecord copy = r;
            if (a != 0.0) {
                std::ostringstream suffix;
                suffix << "#rot" << a;
                copy.video_id += suffix.str();
                copy.rotation = r.rotation + a;
            }
            out.records.push_back(std::move(copy));
        }
    }
    out.validate();
    return out;
}

GrayImage load_record(const ManifestRecord& record, int canonical_size) {
    const auto bytes = read_file_bytes(record.resolved_path);
    try {
        return load_and_prepare(bytes, record.crop, canonical_size, record.rotation);
    } catch (const DataError& e) {
        throw DataError(record.resolved_path.string() + ": " + e.what());
    }
}

}  // namespace rth

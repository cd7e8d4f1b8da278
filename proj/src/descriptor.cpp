#include "rth/descriptor.hpp"

#include <string>

#include "rth/error.hpp"

namespace rth {

void PyramidConfig::validate() const {
    if (canonical_size <= 0) throw ConfigError("canonical_size must be positive");
    if (stride_regions <= 0) throw ConfigError("stride_regions must be positive");
    if (levels.empty()) throw ConfigError("pyramid needs at least one level");
    for (const auto& level : levels) {
        if (level.grid <= 0) throw ConfigError("pyramid grid must be positive");
        if (level.patch_px <= 0 || level.patch_px % 3 != 0)
            throw ConfigError("patch size " + std::to_string(level.patch_px) + " is not a positive multiple of 3");
        if (canonical_size % level.grid != 0)
            throw ConfigError("canonical_size is not divisible by grid " + std::to_string(level.grid));
        if (canonical_size % level.patch_px != 0)
            throw ConfigError("canonical_size is not divisible by patch size " + std::to_string(level.patch_px));
        const int cell = canonical_size / level.grid;
        if (level.overlapped && (level.grid < 2 || cell % 2 != 0))
            throw ConfigError("overlapped grid needs grid >= 2 and an even partition size");
        if (cell < level.patch_px) throw ConfigError("partition smaller than its patch");
    }
}

std::size_t PyramidConfig::block_count() const {
    std::size_t blocks = 0;
    for (const auto& level : levels) {
        const auto g = static_cast<std::size_t>(level.grid);
        blocks += g * g;
        if (level.overlapped) blocks += (g - 1) * (g - 1);
    }
    return blocks;
}

std::vector<Partition> PyramidConfig::partitions() const {
    std::vector<Partition> parts;
    parts.reserve(block_count());
    for (const auto& level : levels) {
        const int cell = canonical_size / level.grid;
        for (int gy = 0; gy < level.grid; ++gy)
            for (int gx = 0; gx < level.grid; ++gx)
                parts.push_back({{gx * cell, gy * cell, (gx + 1) * cell, (gy + 1) * cell}, level.patch_px});
        if (level.overlapped) {
            const int shift = cell / 2;
            for (int gy = 0; gy + 1 < level.grid; ++gy)
                for (int gx = 0; gx + 1 < level.grid; ++gx)
                    parts.push_back({{shift + gx * cell, shift + gy * cell, shift + (gx + 1) * cell,
                                      shift + (gy + 1) * cell},
                                     level.patch_px});
        }
    }
    return parts;
}

int patch_code(const IntegralImage& ii, int x, int y, int patch_px) {
    const int r = patch_px / 3;
    if (r <= 0 || patch_px % 3 != 0) throw DataError("patch size must be a positive multiple of 3");
    if (x < 0 || y < 0 || x + patch_px > ii.width() || y + patch_px > ii.height())
        throw DataError("patch outside image");

    auto mean = [&](int col, int row) {
        const int x0 = x + col * r;
        const int y0 = y + row * r;
        return ii.region_mean(x0, y0, x0 + r, y0 + r);
    };
    // TL, T, TR, R, BR, B, BL, L
    const std::array<double, 8> ring{mean(0, 0), mean(1, 0), mean(2, 0), mean(2, 1),
                                     mean(2, 2), mean(1, 2), mean(0, 2), mean(0, 1)};
    int code = 0;
    for (int k = 0; k < 4; ++k)
        if (ring[k] > ring[k + 4]) code |= 1 << k;
    return code;
}

PatchHistogram partition_histogram(const IntegralImage& ii, const PixelRect& rect, int patch_px,
                                   int stride_regions) {
    PatchHistogram hist;
    const int step = stride_regions * (patch_px / 3);
    if (step <= 0) return hist;
    for (int y = rect.y0; y + patch_px <= rect.y1; y += step) {
        for (int x = rect.x0; x + patch_px <= rect.x1; x += step) {
            hist.bins[patch_code(ii, x, y, patch_px)] += 1.0;
            ++hist.windows;
        }
    }
    if (hist.windows > 0)
        for (double& b : hist.bins) b /= static_cast<double>(hist.windows);
    return hist;
}

Descriptor extract(const GrayImage& img, const PyramidConfig& config) {
    config.validate();
    if (img.width() != config.canonical_size || img.height() != config.canonical_size)
        throw DataError("image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        ", descriptor expects " + std::to_string(config.canonical_size) + " square");

    const IntegralImage ii(img);
    Descriptor d;
    d.values.reserve(config.descriptor_length());
    for (const auto& part : config.partitions()) {
        const auto hist = partition_histogram(ii, part.rect, part.patch_px, config.stride_regions);
        d.values.insert(d.values.end(), hist.bins.begin(), hist.bins.end());
    }
    return d;
}

}  // namespace rth

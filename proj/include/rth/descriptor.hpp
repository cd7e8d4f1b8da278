#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "rth/image.hpp"
#include "rth/integral_image.hpp"

namespace rth {

inline constexpr int kHistogramBins = 16;

// One pyramid level: a grid x grid partition of the image, optionally
// followed by the (grid-1) x (grid-1) grid shifted by half a partition.
struct PyramidLevel {
    int grid = 1;
    int patch_px = 24;
    bool overlapped = false;

    bool operator==(const PyramidLevel&) const = default;
};

struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    bool operator==(const PixelRect&) const = default;
};

struct Partition {
    PixelRect rect;
    int patch_px = 0;
};

struct PyramidConfig {
    int canonical_size = 192;
    int stride_regions = 1;
    std::vector<PyramidLevel> levels{{1, 24, false}, {2, 12, true}, {4, 6, true}};

    // Throws ConfigError on inconsistent geometry.
    void validate() const;

    std::size_t block_count() const;
    std::size_t descriptor_length() const { return block_count() * kHistogramBins; }

    // Partitions in descriptor order: level-major, row-major within a grid,
    // base grid before the overlapped grid.
    std::vector<Partition> partitions() const;

    bool operator==(const PyramidConfig&) const = default;
};

// Concatenated 16-bin histograms, one block per partition.
struct Descriptor {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> block(std::size_t b) const {
        return std::span<const double>(values).subspan(b * kHistogramBins, kHistogramBins);
    }

    bool operator==(const Descriptor&) const = default;
};

struct PatchHistogram {
    std::array<double, kHistogramBins> bins{};
    std::size_t windows = 0;  // zero means no window fitted and bins are all zero

    bool empty() const noexcept { return windows == 0; }
};

// 4-bit centre-symmetric code of the 3x3-region patch whose top-left pixel
// is (x, y). The eight ring regions clockwise from top-left are
// TL, T, TR, R, BR, B, BL, L; bit k is set iff mean(ring[k]) > mean(ring[k+4]).
int patch_code(const IntegralImage& ii, int x, int y, int patch_px);

// L1-normalised histogram of patch codes over every window fully inside
// rect, sliding by stride_regions regions.
PatchHistogram partition_histogram(const IntegralImage& ii, const PixelRect& rect, int patch_px,
                                   int stride_regions);

Descriptor extract(const GrayImage& img, const PyramidConfig& config);

}  // namespace rth

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rth {

// Row-major single-channel image with real-valued intensities. Values are
// 8-bit on ingest but never clamped afterwards.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }

    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const double> pixels() const noexcept { return data_; }
    std::span<double> pixels() noexcept { return data_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

struct CropRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool operator==(const CropRect&) const = default;
};

// Decodes PNG/PPM/PGM (anything OpenCV reads) and converts to gray with
// luma weights 0.299 R + 0.587 G + 0.114 B.
GrayImage decode_image(std::span<const std::uint8_t> bytes);

GrayImage crop(const GrayImage& img, const CropRect& rect);

// Bilinear resize with half-pixel centre alignment and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int width, int height);

// Exact rotation by a multiple of 90 degrees (counter-clockwise positive).
GrayImage rotate_right_angle(const GrayImage& img, int degrees);

// Rotation about the image centre with bilinear resampling; border pixels
// are replicated. Output keeps the input size.
GrayImage rotate_resampled(const GrayImage& img, double degrees);

// Decode, optional crop, optional rotation, bilinear resize to a square
// canonical_size x canonical_size image.
GrayImage load_and_prepare(std::span<const std::uint8_t> bytes,
                           const std::optional<CropRect>& crop_rect,
                           int canonical_size,
                           double rotation_degrees = 0.0);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Binary PGM (P5) with values rounded and clamped to [0, 255].
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

}  // namespace rth

#include "rth/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rth/error.hpp"

namespace rth {

namespace {

cv::Mat as_mat(const GrayImage& img) {
    cv::Mat m(img.height(), img.width(), CV_64F);
    std::copy(img.pixels().begin(), img.pixels().end(), m.ptr<double>(0));
    return m;
}

GrayImage from_mat(const cv::Mat& m) {
    CV_Assert(m.type() == CV_64F && m.isContinuous());
    const auto* p = m.ptr<double>(0);
    return GrayImage(m.cols, m.rows, std::vector<double>(p, p + m.total()));
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
    if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0) throw DataError("image dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw DataError("image data length does not match dimensions");
}

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw DataError("cannot decode empty image buffer");
    const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat raw = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw DataError("undecodable image");

    cv::Mat as_double;
    const double scale = raw.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
    if (raw.depth() != CV_8U && raw.depth() != CV_16U)
        throw DataError("unsupported image bit depth");
    raw.convertTo(as_double, CV_MAKETYPE(CV_64F, raw.channels()), scale);

    GrayImage out(as_double.cols, as_double.rows);
    const int channels = as_double.channels();
    for (int y = 0; y < as_double.rows; ++y) {
        const double* row = as_double.ptr<double>(y);
        for (int x = 0; x < as_double.cols; ++x) {
            const double* px = row + static_cast<std::ptrdiff_t>(x) * channels;
            if (channels == 1 || channels == 2) {
                out.at(x, y) = px[0];
            } else {
                // OpenCV stores colour as BGR(A)
                out.at(x, y) = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
            }
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, const CropRect& rect) {
    if (rect.width <= 0 || rect.height <= 0) throw DataError("empty crop rectangle");
    if (rect.x < 0 || rect.y < 0 || rect.x + rect.width > img.width() ||
        rect.y + rect.height > img.height())
        throw DataError("crop rectangle outside image bounds");
    GrayImage out(rect.width, rect.height);
    for (int y = 0; y < rect.height; ++y)
        for (int x = 0; x < rect.width; ++x) out.at(x, y) = img.at(rect.x + x, rect.y + y);
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
    if (width <= 0 || height <= 0) throw DataError("zero-area resize target");
    if (width == img.width() && height == img.height()) return img;
    cv::Mat dst;
    cv::resize(as_mat(img), dst, cv::Size(width, height), 0.0, 0.0, cv::INTER_LINEAR);
    return from_mat(dst);
}

GrayImage rotate_right_angle(const GrayImage& img, int degrees) {
    const int turns = ((degrees % 360) + 360) % 360;
    if (turns % 90 != 0) throw ConfigError("rotation is not a multiple of 90 degrees");
    if (turns == 0) return img;
    const int code = turns == 90    ? cv::ROTATE_90_COUNTERCLOCKWISE
                     : turns == 180 ? cv::ROTATE_180
                                    : cv::ROTATE_90_CLOCKWISE;
    cv::Mat dst;
    cv::rotate(as_mat(img), dst, code);
    return from_mat(dst);
}

GrayImage rotate_resampled(const GrayImage& img, double degrees) {
    const cv::Point2f centre(0.5f * static_cast<float>(img.width() - 1),
                             0.5f * static_cast<float>(img.height() - 1));
    const cv::Mat rot = cv::getRotationMatrix2D(centre, degrees, 1.0);
    cv::Mat dst;
    cv::warpAffine(as_mat(img), dst, rot, cv::Size(img.width(), img.height()), cv::INTER_LINEAR,
                   cv::BORDER_REPLICATE);
    return from_mat(dst);
}

GrayImage load_and_prepare(std::span<const std::uint8_t> bytes,
                           const std::optional<CropRect>& crop_rect,
                           int canonical_size,
                           double rotation_degrees) {
    GrayImage img = decode_image(bytes);
    if (crop_rect) img = crop(img, *crop_rect);
    if (rotation_degrees != 0.0) {
        const double turns = rotation_degrees / 90.0;
        img = turns == std::floor(turns) ? rotate_right_angle(img, static_cast<int>(rotation_degrees))
                                         : rotate_resampled(img, rotation_degrees);
    }
    return resize_bilinear(img, canonical_size, canonical_size);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.pixels().size());
    for (double v : img.pixels())
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
    return out;
}

}  // namespace rth

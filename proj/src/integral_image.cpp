#include "rth/integral_image.hpp"

namespace rth {

IntegralImage::IntegralImage(const GrayImage& img)
    : width_(img.width()), height_(img.height()),
      table_(static_cast<std::size_t>(img.width() + 1) * (img.height() + 1), 0.0) {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int y = 0; y < height_; ++y) {
        double row_sum = 0.0;
        for (int x = 0; x < width_; ++x) {
            row_sum += img.at(x, y);
            table_[(y + 1) * stride + x + 1] = table_[y * stride + x + 1] + row_sum;
        }
    }
}

}  // namespace rth

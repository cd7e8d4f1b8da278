#pragma once

#include <vector>

#include "rth/image.hpp"

namespace rth {

// Summed-area table of size (width+1) x (height+1); row 0 and column 0 are
// zero. Immutable after construction.
class IntegralImage {
public:
    explicit IntegralImage(const GrayImage& img);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    // Entry (x, y) holds the sum of pixels in [0, x) x [0, y).
    double entry(int x, int y) const { return table_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

    // Sum over the half-open pixel box [x0, x1) x [y0, y1).
    double region_sum(int x0, int y0, int x1, int y1) const {
        return entry(x1, y1) - entry(x0, y1) - entry(x1, y0) + entry(x0, y0);
    }

    double region_mean(int x0, int y0, int x1, int y1) const {
        return region_sum(x0, y0, x1, y1) / static_cast<double>((x1 - x0) * (y1 - y0));
    }

private:
    int width_;
    int height_;
    std::vector<double> table_;
};

}  // namespace rth

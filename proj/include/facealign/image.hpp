#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace facealign {

struct Size {
    int w = 0;
    int h = 0;
    friend bool operator==(const Size&, const Size&) = default;
};

/// Axis-aligned box; (x, y) is the top-left corner, y grows downward.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    int right() const { return x + w; }
    int bottom() const { return y + h; }
    bool fits_in(int width, int height) const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= width && y + h <= height;
    }
    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

double intersection_over_union(const Rect& a, const Rect& b);

class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const std::uint8_t> data() const { return data_; }
    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> row(int y) const {
        return std::span<const std::uint8_t>(data_).subspan(static_cast<std::size_t>(y) * width_, width_);
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved R, G, B bytes, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});
    RgbImage(int width, int height, std::vector<std::uint8_t> interleaved);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }

    Rgb at(int x, int y) const {
        const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb px) {
        const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
        data_[i] = px.r;
        data_[i + 1] = px.g;
        data_[i + 2] = px.b;
    }

    std::span<const std::uint8_t> data() const { return data_; }
    std::span<std::uint8_t> data() { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Summed-area table with a zero first row and column: entry (x, y) holds the
/// sum over [0, x) x [0, y). Optionally carries a squared-sum plane.
class IntegralImage {
public:
    static IntegralImage build(const GrayImage& img, bool with_squares = true);

    /// Table dimensions (image dimensions + 1).
    int width() const { return width_; }
    int height() const { return height_; }
    int image_width() const { return width_ - 1; }
    int image_height() const { return height_ - 1; }
    bool has_squares() const { return !sqsum_.empty(); }

    std::int64_t at(int x, int y) const { return sum_[index(x, y)]; }
    std::int64_t sq_at(int x, int y) const { return sqsum_[index(x, y)]; }

    std::int64_t rect_sum(const Rect& r) const {
        return sum_[index(r.x + r.w, r.y + r.h)] - sum_[index(r.x, r.y + r.h)] -
               sum_[index(r.x + r.w, r.y)] + sum_[index(r.x, r.y)];
    }
    std::int64_t rect_sq_sum(const Rect& r) const {
        return sqsum_[index(r.x + r.w, r.y + r.h)] - sqsum_[index(r.x, r.y + r.h)] -
               sqsum_[index(r.x + r.w, r.y)] + sqsum_[index(r.x, r.y)];
    }

    std::span<const std::int64_t> sums() const { return sum_; }
    std::span<const std::int64_t> sq_sums() const { return sqsum_; }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::int64_t> sum_;
    std::vector<std::int64_t> sqsum_;
};

/// Y = 0.299 R + 0.587 G + 0.114 B, rounded half away from zero.
std::uint8_t luma(Rgb px);
GrayImage to_grayscale(const RgbImage& img);

/// Throws Error(rect_out_of_bounds) unless `r` lies fully inside `img`.
GrayImage crop(const GrayImage& img, const Rect& r);

/// Bilinear resampling with pixel-center alignment and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h);

}  // namespace facealign

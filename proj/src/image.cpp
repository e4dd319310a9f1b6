#include "facealign/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "facealign/error.hpp"

namespace facealign {

namespace {

void check_dims(int width, int height, std::size_t channels, std::size_t length) {
    if (width < 1 || height < 1) {
        throw Error(ErrorKind::invalid_argument, "image", "image dimensions must be positive");
    }
    if (length != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorKind::invalid_argument, "image",
                    "pixel buffer length " + std::to_string(length) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
}

std::uint8_t round_to_byte(double v) {
    const double r = std::round(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace

double intersection_over_union(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    const long long inter = (x1 > x0 && y1 > y0) ? static_cast<long long>(x1 - x0) * (y1 - y0) : 0;
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    check_dims(width, height, 1, static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0));
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height, 1, data_.size());
}

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    check_dims(width, height, 3, static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) * 3);
    data_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved)) {
    check_dims(width, height, 3, data_.size());
}

IntegralImage IntegralImage::build(const GrayImage& img, bool with_squares) {
    IntegralImage ii;
    ii.width_ = img.width() + 1;
    ii.height_ = img.height() + 1;
    ii.sum_.assign(static_cast<std::size_t>(ii.width_) * ii.height_, 0);
    if (with_squares) {
        ii.sqsum_.assign(ii.sum_.size(), 0);
    }
    for (int y = 0; y < img.height(); ++y) {
        std::int64_t row_sum = 0;
        std::int64_t row_sq = 0;
        const auto src = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            const std::int64_t v = src[x];
            row_sum += v;
            ii.sum_[ii.index(x + 1, y + 1)] = ii.sum_[ii.index(x + 1, y)] + row_sum;
            if (with_squares) {
                row_sq += v * v;
                ii.sqsum_[ii.index(x + 1, y + 1)] = ii.sqsum_[ii.index(x + 1, y)] + row_sq;
            }
        }
    }
    return ii;
}

std::uint8_t luma(Rgb px) {
    // Exact rational form of the weights; +500 rounds halves up (away from zero).
    const int scaled = 299 * px.r + 587 * px.g + 114 * px.b;
    return static_cast<std::uint8_t>(std::min((scaled + 500) / 1000, 255));
}

GrayImage to_grayscale(const RgbImage& img) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width()) * img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = luma({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage crop(const GrayImage& img, const Rect& r) {
    if (!r.fits_in(img.width(), img.height())) {
        throw Error(ErrorKind::rect_out_of_bounds, "crop",
                    "rect (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                        std::to_string(r.w) + "," + std::to_string(r.h) + ") exceeds " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(r.w) * r.h);
    for (int y = r.y; y < r.bottom(); ++y) {
        const auto src = img.row(y).subspan(r.x, r.w);
        out.insert(out.end(), src.begin(), src.end());
    }
    return GrayImage(r.w, r.h, std::move(out));
}

GrayImage resize_bilinear(const GrayImage& img, int out_w, int out_h) {
    if (img.empty()) {
        throw Error(ErrorKind::empty_image, "resize", "cannot resize an empty image");
    }
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorKind::invalid_argument, "resize", "target dimensions must be positive");
    }
    const double sx = static_cast<double>(img.width()) / out_w;
    const double sy = static_cast<double>(img.height()) / out_h;

    struct Tap {
        int i0;
        int i1;
        double frac;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> t(n_out);
        for (int d = 0; d < n_out; ++d) {
            const double s = std::clamp((d + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
            const int i0 = static_cast<int>(std::floor(s));
            t[d] = {i0, std::min(i0 + 1, n_in - 1), s - i0};
        }
        return t;
    };
    const auto xs = taps(out_w, img.width(), sx);
    const auto ys = taps(out_h, img.height(), sy);

    GrayImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const auto r0 = img.row(ys[y].i0);
        const auto r1 = img.row(ys[y].i1);
        const double fy = ys[y].frac;
        for (int x = 0; x < out_w; ++x) {
            const auto& t = xs[x];
            const double top = r0[t.i0] + (r0[t.i1] - r0[t.i0]) * t.frac;
            const double bottom = r1[t.i0] + (r1[t.i1] - r1[t.i0]) * t.frac;
            out.at(x, y) = round_to_byte(top + (bottom - top) * fy);
        }
    }
    return out;
}

}  // namespace facealign

#include "facealign/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "facealign/error.hpp"

namespace facealign {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

AffineMatrix AffineMatrix::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-12) {
        throw Error(ErrorKind::singular_matrix, "warp", "affine matrix is singular");
    }
    const double i11 = m22 / d, i12 = -m12 / d;
    const double i21 = -m21 / d, i22 = m11 / d;
    return {i11, i12, -(i11 * m13 + i12 * m23), i21, i22, -(i21 * m13 + i22 * m23)};
}

AffineMatrix AffineMatrix::compose(const AffineMatrix& first) const {
    return {m11 * first.m11 + m12 * first.m21, m11 * first.m12 + m12 * first.m22,
            m11 * first.m13 + m12 * first.m23 + m13,
            m21 * first.m11 + m22 * first.m21, m21 * first.m12 + m22 * first.m22,
            m21 * first.m13 + m22 * first.m23 + m23};
}

double eye_angle(const EyePair& pair) {
    const double dx = pair.left.x - pair.right.x;
    const double dy = pair.left.y - pair.right.y;
    if (dx == 0.0 && dy == 0.0) {
        throw Error(ErrorKind::degenerate_pair, "eye_angle", "eye centers coincide");
    }
    return std::atan2(dy, dx) / kDegToRad;
}

AffineMatrix rotation_matrix(Point2 center, double theta_deg, double scale) {
    const double theta = theta_deg * kDegToRad;
    const double a = scale * std::cos(theta);
    const double b = scale * std::sin(theta);
    return {a, b, (1.0 - a) * center.x - b * center.y, -b, a, b * center.x + (1.0 - a) * center.y};
}

Point2 transform_point(const AffineMatrix& m, Point2 p) {
    return {m.m11 * p.x + m.m12 * p.y + m.m13, m.m21 * p.x + m.m22 * p.y + m.m23};
}

EyePair transform_pair(const AffineMatrix& m, const EyePair& pair, EyeFrame frame) {
    return {transform_point(m, pair.left), transform_point(m, pair.right), frame};
}

GrayImage warp_affine(const GrayImage& src, const AffineMatrix& m, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) {
        throw Error(ErrorKind::invalid_argument, "warp", "output dimensions must be positive");
    }
    const AffineMatrix inv = m.inverse();
    const int w = src.width();
    const int h = src.height();
    auto px = [&](int x, int y) -> double {
        return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : static_cast<double>(src.at(x, y));
    };
    GrayImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const Point2 s = transform_point(inv, {static_cast<double>(x), static_cast<double>(y)});
            const double fx0 = std::floor(s.x);
            const double fy0 = std::floor(s.y);
            if (fx0 < -1.0 || fy0 < -1.0 || fx0 >= w || fy0 >= h) continue;
            const int x0 = static_cast<int>(fx0);
            const int y0 = static_cast<int>(fy0);
            const double ax = s.x - fx0;
            const double ay = s.y - fy0;
            const double top = px(x0, y0) * (1.0 - ax) + px(x0 + 1, y0) * ax;
            const double bottom = px(x0, y0 + 1) * (1.0 - ax) + px(x0 + 1, y0 + 1) * ax;
            const double v = top * (1.0 - ay) + bottom * ay;
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
        }
    }
    return out;
}

Point2 image_center(int width, int height) { return {(width - 1) / 2.0, (height - 1) / 2.0}; }

std::string_view to_string(CropYConvention c) {
    return c == CropYConvention::above ? "above" : "paper-literal";
}

std::optional<CropYConvention> crop_y_convention_from_string(std::string_view s) {
    if (s == "above") return CropYConvention::above;
    if (s == "paper-literal" || s == "paper_literal") return CropYConvention::paper_literal;
    return std::nullopt;
}

CropBox face_crop_box(const EyePair& pair, CropYConvention convention) {
    const double d = pair.interocular();
    if (!(d > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "crop_box", "interocular distance must be positive");
    }
    const double mid_x = (pair.left.x + pair.right.x) / 2.0;
    const double eye_y = (pair.left.y + pair.right.y) / 2.0;
    const double dy = kCropVerticalOffset * d;
    const Point2 origin{mid_x - d, convention == CropYConvention::above ? eye_y - dy : eye_y + dy};
    return {origin, kCropWidthFactor * d, kCropHeightFactor * d};
}

SnappedCrop snap_crop_box(const CropBox& box, int image_width, int image_height, double max_shrink) {
    const int x = static_cast<int>(std::floor(box.origin.x));
    const int y = static_cast<int>(std::floor(box.origin.y));
    const int w = static_cast<int>(std::lround(box.width));
    const int h = static_cast<int>(std::lround(box.height));
    SnappedCrop out;
    out.unclamped = {w, h};
    const int x0 = std::clamp(x, 0, image_width);
    const int y0 = std::clamp(y, 0, image_height);
    const int x1 = std::clamp(x + w, 0, image_width);
    const int y1 = std::clamp(y + h, 0, image_height);
    out.rect = {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
    const bool nonempty = out.rect.w > 0 && out.rect.h > 0 && w > 0 && h > 0;
    out.acceptable = nonempty && out.rect.w >= (1.0 - max_shrink) * w && out.rect.h >= (1.0 - max_shrink) * h;
    return out;
}

}  // namespace facealign

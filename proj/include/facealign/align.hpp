#pragma once

#include <optional>
#include <string_view>

#include "facealign/detect.hpp"
#include "facealign/image.hpp"

namespace facealign {

/// Row-major 2x3 affine transform: p' = [m11 m12; m21 m22] p + [m13; m23].
struct AffineMatrix {
    double m11 = 1.0, m12 = 0.0, m13 = 0.0;
    double m21 = 0.0, m22 = 1.0, m23 = 0.0;

    double det() const { return m11 * m22 - m12 * m21; }
    /// Throws Error(singular_matrix) when |det| <= 1e-12.
    AffineMatrix inverse() const;
    /// this applied after `first`.
    AffineMatrix compose(const AffineMatrix& first) const;

    static AffineMatrix identity() { return {}; }
};

/// Tilt of the eye line in degrees, from the image-left eye (subject right)
/// to the image-right eye (subject left), y downward. Feeding it unchanged to
/// rotation_matrix levels the eyes.
double eye_angle(const EyePair& pair);

/// [[a, b, (1-a)cx - b cy], [-b, a, b cx + (1-a) cy]] with a = scale cos(theta),
/// b = scale sin(theta); theta in degrees.
AffineMatrix rotation_matrix(Point2 center, double theta_deg, double scale = 1.0);

Point2 transform_point(const AffineMatrix& m, Point2 p);
EyePair transform_pair(const AffineMatrix& m, const EyePair& pair, EyeFrame frame = EyeFrame::rotated);

/// Inverse-mapped bilinear warp; samples outside the source read as 0.
GrayImage warp_affine(const GrayImage& src, const AffineMatrix& m, int out_w, int out_h);

/// Pixel-grid center, ((w - 1) / 2, (h - 1) / 2).
Point2 image_center(int width, int height);

enum class CropYConvention {
    above,          // box top 0.8 d above the eye line
    paper_literal,  // box top 0.8 d below the eye line, as literally worded
};

std::string_view to_string(CropYConvention c);
std::optional<CropYConvention> crop_y_convention_from_string(std::string_view s);

struct CropBox {
    Point2 origin;
    double width = 0.0;   // 2 d
    double height = 0.0;  // 2.35 d
};

constexpr double kCropWidthFactor = 2.0;
constexpr double kCropHeightFactor = 2.35;
constexpr double kCropVerticalOffset = 0.8;

/// Throws Error(invalid_argument) when the interocular distance is not positive.
CropBox face_crop_box(const EyePair& pair, CropYConvention convention = CropYConvention::above);

struct SnappedCrop {
    Rect rect;           // clamped to the image; may be empty (w or h 0)
    Size unclamped;      // dimensions before clamping
    bool acceptable = false;
};

/// Origin floors, dimensions round to nearest, then the box is clamped to the
/// image. Clamping that shrinks either dimension by more than `max_shrink`
/// (fraction) marks the crop unacceptable.
SnappedCrop snap_crop_box(const CropBox& box, int image_width, int image_height, double max_shrink = 0.15);

}  // namespace facealign

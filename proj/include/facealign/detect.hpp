#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "facealign/cascade.hpp"
#include "facealign/image.hpp"

namespace facealign {

enum class ScanStrategy {
    /// Resample the image by 1/scale and run the base-size cascade with a
    /// one-pixel step in the resampled image.
    pyramid,
    /// Scale the cascade rectangles by `scale` over the original image, with a
    /// step of max(1, round(scale)) pixels.
    scaled_window,
};

struct DetectParams {
    double scale_factor = 1.1;  // > 1
    int min_neighbors = 3;
    Size min_size{0, 0};
    std::optional<Size> max_size = std::nullopt;
    ScanStrategy strategy = ScanStrategy::pyramid;
    /// Windows whose normalisation-region standard deviation is at or below
    /// this many gray levels are rejected before any stage runs. 0 disables.
    double min_window_stddev = 10.0;

    void validate() const;
};

/// A grouped detection and the size of the candidate class behind it.
struct Detection {
    Rect rect;
    int neighbors = 0;
};

/// Multi-scale sliding-window scan, returning every window that passes the
/// cascade (no grouping), in scan order: scale, then row, then column.
std::vector<Rect> scan_candidates(const CascadeModel& model, const GrayImage& img, const DetectParams& p);

/// Groups similar candidates and keeps classes with more than
/// `min_neighbors` members. min_neighbors == 0 returns the input unchanged
/// (each with neighbors = 1). Output sorted by descending area.
std::vector<Detection> group_rectangles(std::vector<Rect> candidates, int min_neighbors, double eps = 0.2);

std::vector<Detection> detect_multi_scale_weighted(const CascadeModel& model, const GrayImage& img,
                                                   const DetectParams& p);
std::vector<Rect> detect_multi_scale(const CascadeModel& model, const GrayImage& img, const DetectParams& p);

enum class EyeFrame { original, face_roi, rotated };

std::string_view to_string(EyeFrame frame);

/// Eye centers labelled from the subject's point of view. After order_eyes the
/// subject-left eye is the one with the larger image x.
struct EyePair {
    Point2 left;
    Point2 right;
    EyeFrame frame = EyeFrame::original;

    double interocular() const;
};

/// Throws Error(degenerate_pair) for coincident points. Equal x is broken by
/// the smaller y going to `left`.
EyePair order_eyes(Point2 a, Point2 b, EyeFrame frame = EyeFrame::original);

Point2 box_center(const Rect& box);
std::pair<Point2, Point2> eye_centers(const Rect& a, const Rect& b);

enum class EyeRejection { none, angle, interocular };

std::string_view to_string(EyeRejection r);

constexpr double kMaxEyeTiltDegrees = 15.0;
constexpr double kMinInterocularFraction = 0.2;

/// Angle test first: |tilt| > 15 degrees rejects, then interocular distance
/// below `reference_width` / 5 rejects. Both comparisons are strict.
EyeRejection validate_eye_pair(const EyePair& pair, double reference_width);

struct EyeSearchOptions {
    /// Restrict the eye scan to the upper 60% of the face box.
    bool upper_face_only = false;
};

struct EyeAttempt {
    std::optional<EyePair> pair;  // raw detection, before validation
    EyeRejection rejection = EyeRejection::none;
};

struct EyeSearchResult {
    std::optional<EyePair> pair;   // validated
    std::optional<EyePair> raw;    // last raw detection seen
    int attempts = 0;
    EyeRejection last_rejection = EyeRejection::none;
};

/// Face and eye cascades plus the detection policy built on them.
class Detector {
public:
    Detector(CascadeModel face, CascadeModel eye);

    const CascadeModel& face_model() const { return face_; }
    const CascadeModel& eye_model() const { return eye_; }

    /// Largest detection, or nullopt.
    std::optional<Rect> detect_face(const GrayImage& img, const DetectParams& p) const;

    /// Two best eye boxes inside the face box (most neighbors, then larger
    /// area, then smaller x); centers returned in the original image frame.
    std::optional<EyePair> detect_eyes(const GrayImage& img, const Rect& face, const DetectParams& p,
                                       const EyeSearchOptions& opts = {}) const;

    /// Tries each parameter set in order until a pair both detects and
    /// validates against the face-box width.
    EyeSearchResult detect_eyes_with_retry(const GrayImage& img, const Rect& face,
                                           const std::vector<DetectParams>& schedule,
                                           const EyeSearchOptions& opts = {}) const;

private:
    CascadeModel face_;
    CascadeModel eye_;
};

}  // namespace facealign

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "facealign/image.hpp"

namespace facealign {

struct WeightedRect {
    Rect rect;  // base-window coordinates
    double weight = 0.0;
};

struct HaarFeature {
    std::vector<WeightedRect> rects;  // 2 or 3 entries
    bool tilted = false;
};

/// Decision stump: feature value below `threshold` selects `left_val`.
struct WeakClassifier {
    HaarFeature feature;
    double threshold = 0.0;
    double left_val = 0.0;
    double right_val = 0.0;

    double eval(double value) const { return value < threshold ? left_val : right_val; }
};

struct CascadeStage {
    std::vector<WeakClassifier> classifiers;
    double threshold = 0.0;
};

struct CascadeModel {
    int base_width = 0;
    int base_height = 0;
    std::vector<CascadeStage> stages;

    std::size_t stump_count() const;
};

/// Parses the OpenCV "new style" cascade schema (stageType BOOST, featureType
/// HAAR, stump weak classifiers). Throws Error with a kind identifying the
/// rejection reason.
CascadeModel parse_cascade(std::string_view xml_text);
CascadeModel load_cascade(const std::filesystem::path& path);

/// Window size for a given scale: base dimensions times scale, rounded.
Size scaled_window(const CascadeModel& model, double scale);

/// Variance-normalised Haar response of `f` in the window whose top-left is
/// (window.x, window.y), with rect coordinates scaled by `scale` and rounded.
/// Requires an integral image built with squares.
double feature_value(const HaarFeature& f, const IntegralImage& ii, const Rect& window, double scale,
                     const CascadeModel& model);

/// Sum of stump outputs of one stage for the given window.
double stage_sum(const CascadeStage& stage, const IntegralImage& ii, const Rect& window, double scale,
                 const CascadeModel& model);

/// True iff the window passes every stage in order (early exit).
bool eval_window(const CascadeModel& model, const IntegralImage& ii, const Rect& window, double scale);

/// The cascade with every rectangle rounded for one scale and converted to
/// offsets into an integral image of a fixed row stride. Used by the scan.
class ScaledCascade {
public:
    ScaledCascade(const CascadeModel& model, double scale, int table_stride);

    Size window() const { return window_; }
    /// Smallest region (from the window origin) that all rects fit in.
    Size extent() const { return extent_; }

    /// Normalisation divisor (area x standard deviation) at a window origin.
    double norm_factor(const IntegralImage& ii, int x, int y) const;
    /// Standard deviation of the normalisation region (1 when flat).
    double window_stddev(const IntegralImage& ii, int x, int y) const { return norm_factor(ii, x, y) / norm_area_; }
    double feature(std::size_t stage, std::size_t index, const IntegralImage& ii, int x, int y,
                   double norm) const;
    /// Index of the first failing stage, or stage count if the window passes.
    std::size_t first_failing_stage(const IntegralImage& ii, int x, int y) const;
    bool passes(const IntegralImage& ii, int x, int y) const {
        return first_failing_stage(ii, x, y) == stages_.size();
    }

private:
    struct Offsets {
        std::ptrdiff_t p0, p1, p2, p3;
    };
    struct Stump {
        Offsets rect[3];
        double weight[3];
        int count;
        double threshold, left, right;
    };
    struct Stage {
        std::size_t begin, end;
        double threshold;
    };

    double rect_sum(const std::int64_t* table, const Offsets& o) const {
        return static_cast<double>(table[o.p3] - table[o.p1] - table[o.p2] + table[o.p0]);
    }
    double stump_value(const Stump& s, const std::int64_t* base) const;

    int stride_;
    Size window_;
    Size extent_;
    Offsets norm_;
    double norm_area_;
    std::vector<Stump> stumps_;
    std::vector<Stage> stages_;
};

}  // namespace facealign

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "facealign/align.hpp"
#include "facealign/detect.hpp"
#include "facealign/image.hpp"

namespace facealign {

enum class PipelineMode {
    faithful,   // re-detect face and eyes on the rotated image
    optimized,  // map the original eye centers through the rotation instead
};

std::string_view to_string(PipelineMode m);
std::optional<PipelineMode> pipeline_mode_from_string(std::string_view s);

enum class FailureBucket { fnf, enf, fnf_r, enf_r, resize_failed };

constexpr FailureBucket kAllBuckets[] = {FailureBucket::fnf, FailureBucket::enf, FailureBucket::fnf_r,
                                        FailureBucket::enf_r, FailureBucket::resize_failed};

/// Also the bucket's folder name under the run root.
std::string_view to_string(FailureBucket b);
std::optional<FailureBucket> bucket_from_string(std::string_view s);

enum class Outcome {
    success,
    routed,
    error,  // the input could not be read or decoded
    manual_success,
    manual_failed,
};

std::string_view to_string(Outcome o);
std::optional<Outcome> outcome_from_string(std::string_view s);

/// Eye schedule used when none is configured: strict first, then looser.
std::vector<DetectParams> default_eye_schedule();

struct PipelineConfig {
    DetectParams face_params{.scale_factor = 1.1, .min_neighbors = 5};
    std::vector<DetectParams> eye_schedule = default_eye_schedule();
    PipelineMode mode = PipelineMode::faithful;
    Size output_size{60, 70};
    CropYConvention crop_y = CropYConvention::above;
    bool upper_face_eyes = false;
    double max_crop_shrink = 0.15;

    void validate() const;
    /// Canonical JSON of every field that affects outputs.
    std::string canonical_json() const;
    /// 16 hex digits of FNV-1a 64 over canonical_json().
    std::string hash() const;
};

struct StageTime {
    std::string stage;
    double ms = 0.0;
};

struct PipelineResult {
    std::string input;  // as recorded in the manifest
    Outcome outcome = Outcome::error;
    std::optional<FailureBucket> bucket;
    std::optional<std::string> output;  // relative to the run root
    std::optional<std::string> error;
    std::optional<std::string> error_stage;
    PipelineMode mode = PipelineMode::faithful;

    Size input_size;
    std::optional<Rect> face_rect;
    std::optional<EyePair> eyes_pre_raw;  // last detected pair, validated or not
    std::optional<EyePair> eyes_pre;      // validated, original frame
    EyeRejection eyes_pre_rejection = EyeRejection::none;
    int eye_attempts_pre = 0;
    std::optional<double> theta;
    std::optional<Rect> face_rect_rotated;
    std::optional<EyePair> eyes_post;  // rotated frame
    EyeRejection eyes_post_rejection = EyeRejection::none;
    int eye_attempts_post = 0;
    std::optional<double> theta_post;  // residual tilt after rotation
    std::optional<CropBox> crop_box;
    std::optional<Rect> crop_rect;  // snapped and clamped

    std::int64_t started_unix_ms = 0;
    std::vector<StageTime> timings;
    std::optional<GrayImage> output_image;

    bool succeeded() const { return outcome == Outcome::success || outcome == Outcome::manual_success; }
};

/// Runs the per-image stages. Holds read-only state, so one instance can be
/// shared by every worker of a batch.
class Pipeline {
public:
    Pipeline(Detector detector, PipelineConfig config);

    const PipelineConfig& config() const { return config_; }
    const Detector& detector() const { return detector_; }

    /// Grayscale in, result with output_image set on success. Never throws
    /// for stage failures; those become routed outcomes.
    PipelineResult process(const GrayImage& gray, std::string input_name) const;

    /// Loads, processes and, when `run_root` is non-empty, writes the output
    /// to out/ (at `output_rel`, default output_path_for) or copies the
    /// original into its bucket folder.
    PipelineResult process_image(const std::filesystem::path& path, const std::filesystem::path& run_root = {},
                                 std::string input_name = {}, const std::filesystem::path& output_rel = {}) const;

private:
    Detector detector_;
    PipelineConfig config_;
};

/// Rotation, crop and resize from clicked eye centers (original-image
/// coordinates). Only the degenerate-pair check applies to the clicks.
/// Throws Error(degenerate_pair) or an I/O error; other failures are routed
/// as manual_failed.
PipelineResult resume_with_manual_eyes(const GrayImage& gray, Point2 a, Point2 b, const PipelineConfig& config,
                                       std::string input_name = {});
PipelineResult resume_with_manual_eyes(const std::filesystem::path& path, Point2 a, Point2 b,
                                       const PipelineConfig& config, const std::filesystem::path& run_root = {},
                                       std::string input_name = {});

/// Output location of an input under the run root: out/<stem>.png.
std::filesystem::path output_path_for(std::string_view input_name);

struct BatchResult {
    std::vector<PipelineResult> records;  // sorted by input
    std::filesystem::path manifest_path;
};

/// Processes every regular image file directly inside `input_dir` with
/// `jobs` workers. Writes out/, bucket folders (only when used),
/// manifest.jsonl and timings.jsonl under `run_root`. Throws Error(io) before
/// creating anything when `input_dir` is not a readable directory.
BatchResult run_batch(const Pipeline& pipeline, const std::filesystem::path& input_dir,
                      const std::filesystem::path& run_root, std::size_t jobs);

}  // namespace facealign

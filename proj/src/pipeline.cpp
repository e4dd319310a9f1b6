#include "facealign/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <thread>

#include <json.hpp>

#include "facealign/error.hpp"
#include "facealign/image_io.hpp"
#include "facealign/manifest.hpp"

namespace facealign {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(PipelineMode m) { return m == PipelineMode::faithful ? "faithful" : "optimized"; }

std::optional<PipelineMode> pipeline_mode_from_string(std::string_view s) {
    if (s == "faithful") return PipelineMode::faithful;
    if (s == "optimized") return PipelineMode::optimized;
    return std::nullopt;
}

std::string_view to_string(FailureBucket b) {
    switch (b) {
        case FailureBucket::fnf: return "fnf";
        case FailureBucket::enf: return "enf";
        case FailureBucket::fnf_r: return "fnf_r";
        case FailureBucket::enf_r: return "enf_r";
        case FailureBucket::resize_failed: return "resize_failed";
    }
    return "unknown";
}

std::optional<FailureBucket> bucket_from_string(std::string_view s) {
    for (auto b : kAllBuckets) {
        if (to_string(b) == s) return b;
    }
    return std::nullopt;
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::routed: return "routed";
        case Outcome::error: return "error";
        case Outcome::manual_success: return "manual_success";
        case Outcome::manual_failed: return "manual_failed";
    }
    return "unknown";
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
    for (auto o : {Outcome::success, Outcome::routed, Outcome::error, Outcome::manual_success,
                   Outcome::manual_failed}) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

std::vector<DetectParams> default_eye_schedule() {
    const DetectParams strict{.scale_factor = 1.05, .min_neighbors = 5, .min_size = {24, 24}};
    const DetectParams relaxed{.scale_factor = 1.05, .min_neighbors = 3, .min_size = {22, 22}};
    const DetectParams loose{.scale_factor = 1.05, .min_neighbors = 2, .min_size = {20, 20}};
    return {strict, relaxed, loose};
}

void PipelineConfig::validate() const {
    face_params.validate();
    if (eye_schedule.empty()) {
        throw Error(ErrorKind::invalid_argument, "config", "eye schedule is empty");
    }
    for (const auto& p : eye_schedule) p.validate();
    if (output_size.w < 1 || output_size.h < 1) {
        throw Error(ErrorKind::invalid_argument, "config", "output size must be positive");
    }
    if (!(max_crop_shrink >= 0.0 && max_crop_shrink < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "config", "max_crop_shrink must be in [0, 1)");
    }
}

namespace {

json params_json(const DetectParams& p) {
    json j = {{"scale_factor", p.scale_factor},
              {"min_neighbors", p.min_neighbors},
              {"min_size", {p.min_size.w, p.min_size.h}},
              {"strategy", p.strategy == ScanStrategy::pyramid ? "pyramid" : "scaled_window"},
              {"min_window_stddev", p.min_window_stddev}};
    j["max_size"] = p.max_size ? json{p.max_size->w, p.max_size->h} : json(nullptr);
    return j;
}

}  // namespace

std::string PipelineConfig::canonical_json() const {
    json eyes = json::array();
    for (const auto& p : eye_schedule) eyes.push_back(params_json(p));
    const json j = {{"face_params", params_json(face_params)},
                    {"eye_schedule", eyes},
                    {"mode", to_string(mode)},
                    {"output_size", {output_size.w, output_size.h}},
                    {"crop_y", to_string(crop_y)},
                    {"upper_face_eyes", upper_face_eyes},
                    {"max_crop_shrink", max_crop_shrink}};
    return j.dump();
}

std::string PipelineConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = kHex[h & 0xf];
    return out;
}

namespace {

class StageTimer {
public:
    explicit StageTimer(std::vector<StageTime>& sink) : sink_(sink) {}

    void lap(std::string stage) {
        const auto now = std::chrono::steady_clock::now();
        sink_.push_back({std::move(stage), std::chrono::duration<double, std::milli>(now - last_).count()});
        last_ = now;
    }

private:
    std::vector<StageTime>& sink_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::int64_t unix_ms_now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void route(PipelineResult& r, FailureBucket b) {
    r.outcome = Outcome::routed;
    r.bucket = b;
}

// Crop and resize in the rotated frame. Returns false (and routes) when the
// crop box does not fit well enough.
bool crop_and_resize(PipelineResult& r, const GrayImage& rotated, const EyePair& eyes, const PipelineConfig& cfg,
                     FailureBucket on_fail) {
    if (!(eyes.interocular() > 0.0)) {
        route(r, on_fail);
        return false;
    }
    r.crop_box = face_crop_box(eyes, cfg.crop_y);
    const SnappedCrop snapped = snap_crop_box(*r.crop_box, rotated.width(), rotated.height(), cfg.max_crop_shrink);
    r.crop_rect = snapped.rect;
    if (!snapped.acceptable) {
        route(r, on_fail);
        return false;
    }
    r.output_image = resize_bilinear(crop(rotated, snapped.rect), cfg.output_size.w, cfg.output_size.h);
    return true;
}

void set_error(PipelineResult& r, const Error& e) {
    r.outcome = Outcome::error;
    r.error = e.what();
    r.error_stage = e.stage();
}

void store(PipelineResult& r, const fs::path& src, const fs::path& run_root, const fs::path& out_rel) {
    if (run_root.empty()) return;
    if (r.succeeded() && r.output_image) {
        const fs::path rel = out_rel.empty() ? output_path_for(r.input) : out_rel;
        fs::create_directories(run_root / rel.parent_path());
        save_image(*r.output_image, run_root / rel);
        r.output = rel.generic_string();
    } else if (r.outcome == Outcome::routed && r.bucket) {
        const fs::path dir = run_root / std::string(to_string(*r.bucket));
        fs::create_directories(dir);
        const fs::path dst = dir / fs::path(r.input).filename();
        if (fs::weakly_canonical(src) != fs::weakly_canonical(dst)) {
            fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
        }
    }
}

}  // namespace

fs::path output_path_for(std::string_view input_name) {
    return fs::path("out") / (fs::path(input_name).stem().string() + ".png");
}

Pipeline::Pipeline(Detector detector, PipelineConfig config)
    : detector_(std::move(detector)), config_(std::move(config)) {
    config_.validate();
}

PipelineResult Pipeline::process(const GrayImage& gray, std::string input_name) const {
    PipelineResult r;
    r.input = std::move(input_name);
    r.mode = config_.mode;
    r.input_size = {gray.width(), gray.height()};
    StageTimer timer(r.timings);
    const EyeSearchOptions eye_opts{config_.upper_face_eyes};
    try {
        r.face_rect = detector_.detect_face(gray, config_.face_params);
        timer.lap("detect_face");
        if (!r.face_rect) {
            route(r, FailureBucket::fnf);
            return r;
        }

        const auto pre = detector_.detect_eyes_with_retry(gray, *r.face_rect, config_.eye_schedule, eye_opts);
        timer.lap("detect_eyes");
        r.eyes_pre_raw = pre.raw;
        r.eye_attempts_pre = pre.attempts;
        r.eyes_pre_rejection = pre.last_rejection;
        if (!pre.pair) {
            route(r, FailureBucket::enf);
            return r;
        }
        r.eyes_pre = pre.pair;

        r.theta = eye_angle(*r.eyes_pre);
        const AffineMatrix m = rotation_matrix(image_center(gray.width(), gray.height()), *r.theta);
        const GrayImage rotated = warp_affine(gray, m, gray.width(), gray.height());
        timer.lap("rotate");

        if (config_.mode == PipelineMode::faithful) {
            r.face_rect_rotated = detector_.detect_face(rotated, config_.face_params);
            if (!r.face_rect_rotated) {
                timer.lap("redetect");
                route(r, FailureBucket::fnf_r);
                return r;
            }
            const auto post =
                detector_.detect_eyes_with_retry(rotated, *r.face_rect_rotated, config_.eye_schedule, eye_opts);
            timer.lap("redetect");
            r.eye_attempts_post = post.attempts;
            r.eyes_post_rejection = post.last_rejection;
            if (!post.pair) {
                r.eyes_post = post.raw;
                if (r.eyes_post) r.eyes_post->frame = EyeFrame::rotated;
                route(r, FailureBucket::enf_r);
                return r;
            }
            r.eyes_post = post.pair;
            r.eyes_post->frame = EyeFrame::rotated;
        } else {
            r.eyes_post = transform_pair(m, *r.eyes_pre);
            timer.lap("transform_eyes");
        }
        r.theta_post = eye_angle(*r.eyes_post);

        const bool ok = crop_and_resize(r, rotated, *r.eyes_post, config_, FailureBucket::resize_failed);
        timer.lap("crop_resize");
        if (ok) r.outcome = Outcome::success;
    } catch (const Error& e) {
        set_error(r, e);
    }
    return r;
}

PipelineResult Pipeline::process_image(const fs::path& path, const fs::path& run_root, std::string input_name,
                                       const fs::path& output_rel) const {
    if (input_name.empty()) input_name = path.filename().string();
    const std::int64_t started = unix_ms_now();
    const auto t0 = std::chrono::steady_clock::now();
    GrayImage gray;
    try {
        gray = load_gray(path);
    } catch (const Error& e) {
        PipelineResult r;
        r.input = std::move(input_name);
        r.mode = config_.mode;
        r.started_unix_ms = started;
        set_error(r, e);
        return r;
    }
    const double load_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    PipelineResult r = process(gray, std::move(input_name));
    r.started_unix_ms = started;
    r.timings.insert(r.timings.begin(), StageTime{"load_grayscale", load_ms});
    try {
        const auto t1 = std::chrono::steady_clock::now();
        store(r, path, run_root, output_rel);
        r.timings.push_back(
            {"save", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count()});
    } catch (const Error& e) {
        set_error(r, e);
    } catch (const fs::filesystem_error& e) {
        set_error(r, Error(ErrorKind::io, "save", e.what()));
    }
    return r;
}

PipelineResult resume_with_manual_eyes(const GrayImage& gray, Point2 a, Point2 b, const PipelineConfig& config,
                                       std::string input_name) {
    const EyePair clicked = order_eyes(a, b, EyeFrame::original);
    PipelineResult r;
    r.input = std::move(input_name);
    r.mode = PipelineMode::optimized;
    r.input_size = {gray.width(), gray.height()};
    r.eyes_pre = clicked;
    r.eyes_pre_raw = clicked;
    r.started_unix_ms = unix_ms_now();
    StageTimer timer(r.timings);
    r.theta = eye_angle(clicked);
    const AffineMatrix m = rotation_matrix(image_center(gray.width(), gray.height()), *r.theta);
    const GrayImage rotated = warp_affine(gray, m, gray.width(), gray.height());
    timer.lap("rotate");
    r.eyes_post = transform_pair(m, clicked);
    r.theta_post = eye_angle(*r.eyes_post);
    const bool ok = crop_and_resize(r, rotated, *r.eyes_post, config, FailureBucket::resize_failed);
    timer.lap("crop_resize");
    r.outcome = ok ? Outcome::manual_success : Outcome::manual_failed;
    return r;
}

PipelineResult resume_with_manual_eyes(const fs::path& path, Point2 a, Point2 b, const PipelineConfig& config,
                                       const fs::path& run_root, std::string input_name) {
    if (input_name.empty()) input_name = path.filename().string();
    const GrayImage gray = load_gray(path);
    PipelineResult r = resume_with_manual_eyes(gray, a, b, config, std::move(input_name));
    if (!run_root.empty() && r.outcome == Outcome::manual_success) {
        const fs::path rel = output_path_for(r.input);
        fs::create_directories(run_root / rel.parent_path());
        save_image(*r.output_image, run_root / rel);
        r.output = rel.generic_string();
    }
    return r;
}

BatchResult run_batch(const Pipeline& pipeline, const fs::path& input_dir, const fs::path& run_root,
                      std::size_t jobs) {
    std::error_code ec;
    if (!fs::is_directory(input_dir, ec)) {
        throw Error(ErrorKind::io, "batch", "not a readable directory: " + input_dir.string());
    }
    std::vector<fs::path> inputs;
    fs::directory_iterator it(input_dir, ec);
    if (ec) throw Error(ErrorKind::io, "batch", "cannot list " + input_dir.string() + ": " + ec.message());
    for (const auto& entry : it) {
        if (entry.is_regular_file() && is_supported_image_path(entry.path())) inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

    fs::create_directories(run_root / "out");

    // Inputs sharing a stem would collide in out/; those keep their extension.
    std::map<std::string, int> stems;
    for (const auto& p : inputs) ++stems[p.stem().string()];

    BatchResult batch;
    batch.records.resize(inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            const std::string name = inputs[i].filename().string();
            const fs::path out_rel =
                stems.at(inputs[i].stem().string()) > 1 ? fs::path("out") / (name + ".png") : output_path_for(name);
            auto& rec = batch.records[i];
            rec = pipeline.process_image(inputs[i], run_root, name, out_rel);
            rec.output_image.reset();
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(jobs, std::max<std::size_t>(1, inputs.size())));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    batch.manifest_path = run_root / "manifest.jsonl";
    write_manifest(batch.manifest_path, batch.records, pipeline.config());
    write_timings(run_root / "timings.jsonl", batch.records);
    return batch;
}

}  // namespace facealign

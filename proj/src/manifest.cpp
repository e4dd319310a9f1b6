#include "facealign/manifest.hpp"

#include <fstream>
#include <string>

#include "facealign/error.hpp"

namespace facealign {

namespace fs = std::filesystem;
using nlohmann::json;

json rect_json(const Rect& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

json point_json(Point2 p) { return {{"x", p.x}, {"y", p.y}}; }

json pair_json(const EyePair& p) { return {{"left", point_json(p.left)}, {"right", point_json(p.right)}}; }

namespace {

template <class T, class F>
json opt(const std::optional<T>& v, F&& f) {
    return v ? json(f(*v)) : json(nullptr);
}

json crop_json(const CropBox& b) {
    return {{"x", b.origin.x}, {"y", b.origin.y}, {"width", b.width}, {"height", b.height}};
}

void write_lines(const fs::path& path, const std::vector<json>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "manifest", "cannot write " + path.string());
    for (const auto& j : lines) out << j.dump() << '\n';
    if (!out) throw Error(ErrorKind::io, "manifest", "write failed for " + path.string());
}

}  // namespace

json manifest_record(const PipelineResult& r, const PipelineConfig& config) {
    auto same = [](const auto& v) { return v; };
    json j;
    j["input_path"] = r.input;
    j["outcome"] = to_string(r.outcome);
    j["bucket"] = opt(r.bucket, [](FailureBucket b) { return std::string(to_string(b)); });
    j["output"] = opt(r.output, same);
    j["error"] = opt(r.error, same);
    j["error_stage"] = opt(r.error_stage, same);
    j["mode"] = to_string(r.mode);
    j["config_hash"] = config.hash();
    j["out_size"] = {config.output_size.w, config.output_size.h};
    j["input_size"] = {r.input_size.w, r.input_size.h};
    j["face_rect"] = opt(r.face_rect, rect_json);
    j["eyes_pre_raw"] = opt(r.eyes_pre_raw, pair_json);
    j["eyes_pre"] = opt(r.eyes_pre, pair_json);
    j["eye_rejection_pre"] = to_string(r.eyes_pre_rejection);
    j["eye_attempts_pre"] = r.eye_attempts_pre;
    j["theta"] = opt(r.theta, same);
    j["face_rect_rotated"] = opt(r.face_rect_rotated, rect_json);
    j["eyes_post"] = opt(r.eyes_post, pair_json);
    j["eye_rejection_post"] = to_string(r.eyes_post_rejection);
    j["eye_attempts_post"] = r.eye_attempts_post;
    j["theta_post"] = opt(r.theta_post, same);
    j["crop_box"] = opt(r.crop_box, crop_json);
    j["crop_rect"] = opt(r.crop_rect, rect_json);
    return j;
}

json timing_record(const PipelineResult& r) {
    json stages = json::object();
    double total = 0.0;
    for (const auto& t : r.timings) {
        stages[t.stage] = t.ms;
        total += t.ms;
    }
    return {{"input_path", r.input}, {"started_unix_ms", r.started_unix_ms}, {"stages_ms", stages},
            {"total_ms", total}};
}

void write_manifest(const fs::path& path, const std::vector<PipelineResult>& results, const PipelineConfig& config) {
    std::vector<json> lines;
    lines.reserve(results.size());
    for (const auto& r : results) lines.push_back(manifest_record(r, config));
    write_lines(path, lines);
}

void write_timings(const fs::path& path, const std::vector<PipelineResult>& results) {
    std::vector<json> lines;
    lines.reserve(results.size());
    for (const auto& r : results) lines.push_back(timing_record(r));
    write_lines(path, lines);
}

void append_jsonl(const fs::path& path, const json& record) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorKind::io, "journal", "cannot append to " + path.string());
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorKind::io, "journal", "append failed for " + path.string());
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw Error(ErrorKind::not_found, "manifest", "no such file: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "manifest", "cannot read " + path.string());
    std::vector<json> out;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorKind::manifest_corrupt, "manifest",
                        path.filename().string() + " line " + std::to_string(n) + ": not a JSON object");
        }
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace facealign

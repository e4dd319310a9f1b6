#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "facealign/pipeline.hpp"

namespace facealign {

/// One manifest line. Keys are snake_case and serialised in sorted order;
/// wall-clock data is kept out so that reruns are byte-identical.
nlohmann::json manifest_record(const PipelineResult& r, const PipelineConfig& config);

/// Per-stage wall times and start timestamp for one result.
nlohmann::json timing_record(const PipelineResult& r);

/// Overwrites `path` with one record per result, in the given order.
void write_manifest(const std::filesystem::path& path, const std::vector<PipelineResult>& results,
                    const PipelineConfig& config);
void write_timings(const std::filesystem::path& path, const std::vector<PipelineResult>& results);

/// Appends and flushes one line. Callers serialise concurrent appends.
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& record);

/// Parses a JSON-lines file, skipping blank lines. Throws Error(not_found)
/// for a missing file and Error(manifest_corrupt) naming the bad line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

nlohmann::json rect_json(const Rect& r);
nlohmann::json point_json(Point2 p);
nlohmann::json pair_json(const EyePair& p);

}  // namespace facealign

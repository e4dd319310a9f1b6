#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace facealign {

struct Quantiles {
    double min, p25, median, p75, max;
};

struct RunStats {
    std::size_t total = 0;
    std::map<std::string, std::size_t> outcomes;  // every outcome name, zero-filled
    std::map<std::string, std::size_t> buckets;   // every bucket name, zero-filled
    /// success / (success + routed + error); undefined for an empty run.
    std::optional<double> success_rate;
    /// manual_success / (manual_success + manual_failed).
    std::optional<double> manual_success_rate;
    std::optional<Quantiles> theta;  // over records with a measured tilt
    std::map<std::string, double> mean_stage_ms;
};

/// Linear interpolation between order statistics. Empty input gives nullopt.
std::optional<Quantiles> quantiles(std::vector<double> values);

/// `timings` may be empty, in which case no stage means are reported.
RunStats compute_stats(const std::vector<nlohmann::json>& manifest, const std::vector<nlohmann::json>& timings = {});

/// Reads the manifest and, if present, timings.jsonl beside it.
RunStats stats_from_files(const std::filesystem::path& manifest_path);

/// Undefined rates and quantiles serialise as null.
nlohmann::json stats_json(const RunStats& s);
std::string stats_table(const RunStats& s);

}  // namespace facealign

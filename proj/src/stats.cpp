#include "facealign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "facealign/error.hpp"
#include "facealign/manifest.hpp"
#include "facealign/pipeline.hpp"

namespace facealign {

using nlohmann::json;

std::optional<Quantiles> quantiles(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    std::sort(v.begin(), v.end());
    auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
    };
    return Quantiles{v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

RunStats compute_stats(const std::vector<json>& manifest, const std::vector<json>& timings) {
    RunStats s;
    for (auto o : {Outcome::success, Outcome::routed, Outcome::error, Outcome::manual_success,
                   Outcome::manual_failed}) {
        s.outcomes[std::string(to_string(o))] = 0;
    }
    for (auto b : kAllBuckets) s.buckets[std::string(to_string(b))] = 0;

    std::vector<double> thetas;
    for (const auto& rec : manifest) {
        const auto outcome = rec.value("outcome", std::string());
        if (!outcome_from_string(outcome)) {
            throw Error(ErrorKind::manifest_corrupt, "stats", "unknown outcome '" + outcome + "'");
        }
        ++s.total;
        ++s.outcomes[outcome];
        if (outcome == "routed") {
            const auto bucket = rec.value("bucket", std::string());
            if (!bucket_from_string(bucket)) {
                throw Error(ErrorKind::manifest_corrupt, "stats", "unknown bucket '" + bucket + "'");
            }
            ++s.buckets[bucket];
        }
        if (const auto it = rec.find("theta"); it != rec.end() && it->is_number()) thetas.push_back(it->get<double>());
    }
    const std::size_t automatic = s.outcomes["success"] + s.outcomes["routed"] + s.outcomes["error"];
    if (automatic > 0) s.success_rate = static_cast<double>(s.outcomes["success"]) / automatic;
    const std::size_t manual = s.outcomes["manual_success"] + s.outcomes["manual_failed"];
    if (manual > 0) s.manual_success_rate = static_cast<double>(s.outcomes["manual_success"]) / manual;
    s.theta = quantiles(std::move(thetas));

    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& t : timings) {
        const auto it = t.find("stages_ms");
        if (it == t.end() || !it->is_object()) continue;
        for (const auto& [stage, ms] : it->items()) {
            if (!ms.is_number()) continue;
            acc[stage].first += ms.get<double>();
            ++acc[stage].second;
        }
    }
    for (const auto& [stage, sum_n] : acc) s.mean_stage_ms[stage] = sum_n.first / sum_n.second;
    return s;
}

RunStats stats_from_files(const std::filesystem::path& manifest_path) {
    const auto manifest = read_jsonl(manifest_path);
    const auto timings_path = manifest_path.parent_path() / "timings.jsonl";
    std::vector<json> timings;
    std::error_code ec;
    if (std::filesystem::is_regular_file(timings_path, ec)) timings = read_jsonl(timings_path);
    return compute_stats(manifest, timings);
}

json stats_json(const RunStats& s) {
    json j;
    j["total"] = s.total;
    j["outcomes"] = s.outcomes;
    j["buckets"] = s.buckets;
    j["success_rate"] = s.success_rate ? json(*s.success_rate) : json(nullptr);
    j["manual_success_rate"] = s.manual_success_rate ? json(*s.manual_success_rate) : json(nullptr);
    if (s.theta) {
        j["theta_quantiles"] = {{"min", s.theta->min},
                                {"p25", s.theta->p25},
                                {"median", s.theta->median},
                                {"p75", s.theta->p75},
                                {"max", s.theta->max}};
    } else {
        j["theta_quantiles"] = nullptr;
    }
    j["mean_stage_ms"] = s.mean_stage_ms;
    return j;
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

std::string stats_table(const RunStats& s) {
    std::ostringstream out;
    auto row = [&](const std::string& k, const std::string& v) {
        out << "  " << k << std::string(k.size() < 20 ? 20 - k.size() : 1, ' ') << v << '\n';
    };
    out << "records\n";
    row("total", std::to_string(s.total));
    for (const auto& [k, n] : s.outcomes) row(k, std::to_string(n));
    out << "buckets\n";
    for (const auto& [k, n] : s.buckets) row(k, std::to_string(n));
    out << "rates\n";
    row("success_rate", s.success_rate ? fmt("%.4f", *s.success_rate) : "undefined");
    row("manual_success_rate", s.manual_success_rate ? fmt("%.4f", *s.manual_success_rate) : "undefined");
    out << "theta (degrees)\n";
    if (s.theta) {
        row("min", fmt("%.3f", s.theta->min));
        row("p25", fmt("%.3f", s.theta->p25));
        row("median", fmt("%.3f", s.theta->median));
        row("p75", fmt("%.3f", s.theta->p75));
        row("max", fmt("%.3f", s.theta->max));
    } else {
        row("quantiles", "undefined");
    }
    if (!s.mean_stage_ms.empty()) {
        out << "mean stage time (ms)\n";
        for (const auto& [k, ms] : s.mean_stage_ms) row(k, fmt("%.2f", ms));
    }
    return out.str();
}

}  // namespace facealign

#pragma once

#include <string>
#include <vector>

#include "hscan/core/types.hpp"
#include "hscan/eval/metrics.hpp"
#include "json.hpp"

namespace hscan::eval {

/// Metrics over the viewed records only, in viewing order, as if they were
/// the whole dataset.
struct MiniReport {
    std::string project_id;
    std::size_t n_total = 0;
    std::size_t n_viewed = 0;
    std::size_t n_includes = 0;
    std::size_t n_excludes = 0;
    bool partial = false;
    Trajectory trajectory;
    Metrics metrics;
    GainCurve curve;
    std::vector<RankingSummary> history;
};

/// Throws ConflictError when no viewed record is an include.
MiniReport mini_report(const Project& project, double target_recall = 0.95);

/// Shared by the CLI and the HTTP service so both emit identical bytes.
nlohmann::json mini_report_json(const MiniReport& r);
std::string mini_report_text(const MiniReport& r);

}  // namespace hscan::eval

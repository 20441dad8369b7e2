#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hscan::eval {

/// A screening order: record ids with their gold relevance, first screened first.
struct Trajectory {
    std::vector<std::string> ids;
    std::vector<bool> relevant;

    std::size_t size() const { return relevant.size(); }
    std::size_t positives() const;

    /// Ids "r1", "r2", ... for quick construction in tests and tools.
    static Trajectory from_flags(std::vector<bool> flags);
    void push(std::string id, bool is_relevant);
};

/// Records at positions 1..k are predicted relevant, the rest irrelevant.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

ConfusionCounts confusion_at(const Trajectory& t, std::size_t k);

/// Throw InputError on a zero denominator.
double recall(const ConfusionCounts& c);
double precision(const ConfusionCounts& c);

/// Smallest k whose recall reaches r (no interpolation).
std::size_t first_crossing(const Trajectory& t, double r);

/// (TN + FN) / N - (1 - r) at the first crossing.
double wss_at_r(const Trajectory& t, double r);
/// TN / (TN + FP) at the first crossing; requires at least one irrelevant record.
double tnr_at_r(const Trajectory& t, double r);
/// Recall after screening floor(f * N) records.
double recall_at_fraction(const Trajectory& t, double f);
double average_precision(const Trajectory& t);
/// 100 * position of the last relevant record / N.
double last_include_pct(const Trajectory& t);

inline constexpr std::array<double, 4> kRecallFractions{0.50, 0.75, 0.90, 0.95};

struct Metrics {
    std::size_t n = 0;
    std::size_t p = 0;
    double target_recall = 0.95;
    double wss = 0.0;
    std::optional<double> tnr;  ///< empty when every record is relevant
    std::array<double, 4> recall_at{};
    double average_precision = 0.0;
    double last_include_pct = 0.0;
};

Metrics compute_metrics(const Trajectory& t, double r = 0.95);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

/// Mean and SD across runs, per metric. Population SD unless `sample_sd`.
struct AggregateMetrics {
    std::size_t runs = 0;
    MeanSd wss;
    MeanSd tnr;
    std::array<MeanSd, 4> recall_at{};
    MeanSd average_precision;
    MeanSd last_include_pct;
};

MeanSd mean_sd(std::span<const double> values, bool sample_sd = false);
AggregateMetrics aggregate_runs(std::span<const Metrics> runs, bool sample_sd = false);

struct GainPoint {
    std::size_t screened = 0;
    double fraction = 0.0;
    double recall = 0.0;
};

struct GainCurve {
    std::vector<GainPoint> points;  ///< one per screened record
    bool crosses_diagonal = false;  ///< some point after the seed prefix lies strictly below recall = fraction
};

GainCurve gain_curve(const Trajectory& t, std::size_t seed_prefix = 0);
/// Header "screened,fraction_screened,recall,random_baseline"; LF line endings.
std::string gain_curve_csv(const GainCurve& curve);

/// Header "record_id,is_relevant"; relevance accepts 1/0, true/false, yes/no.
Trajectory parse_trajectory_csv(std::string_view text);
std::string trajectory_csv(const Trajectory& t);

}  // namespace hscan::eval

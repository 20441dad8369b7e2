#include "hscan/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hscan/core/csv.hpp"
#include "hscan/core/errors.hpp"
#include "hscan/core/utf8.hpp"

namespace hscan::eval {

std::size_t Trajectory::positives() const {
    return static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
}

Trajectory Trajectory::from_flags(std::vector<bool> flags) {
    Trajectory t;
    t.ids.reserve(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) t.ids.push_back(fmt::format("r{}", i + 1));
    t.relevant = std::move(flags);
    return t;
}

void Trajectory::push(std::string id, bool is_relevant) {
    ids.push_back(std::move(id));
    relevant.push_back(is_relevant);
}

ConfusionCounts confusion_at(const Trajectory& t, std::size_t k) {
    const std::size_t n = t.size();
    if (k > n) throw InputError(fmt::format("cutoff {} exceeds trajectory length {}", k, n));
    ConfusionCounts c;
    c.tp = static_cast<std::size_t>(std::count(t.relevant.begin(), t.relevant.begin() + static_cast<long>(k), true));
    c.fp = k - c.tp;
    c.fn = t.positives() - c.tp;
    c.tn = n - k - c.fn;
    return c;
}

double recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) throw InputError("recall undefined: no relevant records");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) throw InputError("precision undefined: nothing screened");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

namespace {

void require_positive(const Trajectory& t) {
    if (t.ids.size() != t.relevant.size()) throw InputError("trajectory ids and flags differ in length");
    if (t.positives() == 0) throw InputError("metric undefined: trajectory has no relevant records");
}

void require_target(double r) {
    if (!(r > 0.0 && r <= 1.0)) throw InputError(fmt::format("target recall must be in (0, 1], got {}", r));
}

}  // namespace

std::size_t first_crossing(const Trajectory& t, double r) {
    require_positive(t);
    require_target(r);
    const double p = static_cast<double>(t.positives());
    std::size_t tp = 0;
    for (std::size_t k = 1; k <= t.size(); ++k) {
        if (t.relevant[k - 1]) ++tp;
        if (static_cast<double>(tp) / p >= r) return k;
    }
    return t.size();
}

double wss_at_r(const Trajectory& t, double r) {
    const ConfusionCounts c = confusion_at(t, first_crossing(t, r));
    return static_cast<double>(c.tn + c.fn) / static_cast<double>(t.size()) - (1.0 - r);
}

double tnr_at_r(const Trajectory& t, double r) {
    const ConfusionCounts c = confusion_at(t, first_crossing(t, r));
    if (c.tn + c.fp == 0) throw InputError("TNR undefined: trajectory has no irrelevant records");
    return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

double recall_at_fraction(const Trajectory& t, double f) {
    require_positive(t);
    if (!(f >= 0.0 && f <= 1.0)) throw InputError(fmt::format("screened fraction must be in [0, 1], got {}", f));
    // The epsilon keeps 0.95 * 100 from flooring to 94.
    const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(t.size()) + 1e-9));
    return recall(confusion_at(t, std::min(k, t.size())));
}

double average_precision(const Trajectory& t) {
    require_positive(t);
    double sum = 0.0;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!t.relevant[i]) continue;
        ++tp;
        sum += static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    return sum / static_cast<double>(tp);
}

double last_include_pct(const Trajectory& t) {
    require_positive(t);
    std::size_t last = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.relevant[i]) last = i + 1;
    }
    return 100.0 * static_cast<double>(last) / static_cast<double>(t.size());
}

Metrics compute_metrics(const Trajectory& t, double r) {
    Metrics m;
    m.n = t.size();
    m.p = t.positives();
    m.target_recall = r;
    m.wss = wss_at_r(t, r);
    if (m.p < m.n) m.tnr = tnr_at_r(t, r);
    for (std::size_t i = 0; i < kRecallFractions.size(); ++i) m.recall_at[i] = recall_at_fraction(t, kRecallFractions[i]);
    m.average_precision = average_precision(t);
    m.last_include_pct = last_include_pct(t);
    return m;
}

MeanSd mean_sd(std::span<const double> values, bool sample_sd) {
    if (values.empty()) throw InputError("cannot aggregate zero values");
    MeanSd out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() == 1) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double denom = static_cast<double>(sample_sd ? values.size() - 1 : values.size());
    out.sd = std::sqrt(ss / denom);
    return out;
}

AggregateMetrics aggregate_runs(std::span<const Metrics> runs, bool sample_sd) {
    if (runs.empty()) throw InputError("cannot aggregate zero runs");
    AggregateMetrics a;
    a.runs = runs.size();
    const auto over = [&](auto field) {
        std::vector<double> v;
        v.reserve(runs.size());
        for (const auto& m : runs) v.push_back(field(m));
        return mean_sd(v, sample_sd);
    };
    a.wss = over([](const Metrics& m) { return m.wss; });
    a.tnr = over([](const Metrics& m) { return m.tnr.value_or(0.0); });
    for (std::size_t i = 0; i < kRecallFractions.size(); ++i) {
        a.recall_at[i] = over([i](const Metrics& m) { return m.recall_at[i]; });
    }
    a.average_precision = over([](const Metrics& m) { return m.average_precision; });
    a.last_include_pct = over([](const Metrics& m) { return m.last_include_pct; });
    return a;
}

GainCurve gain_curve(const Trajectory& t, std::size_t seed_prefix) {
    require_positive(t);
    GainCurve g;
    const double n = static_cast<double>(t.size());
    const double p = static_cast<double>(t.positives());
    std::size_t tp = 0;
    g.points.reserve(t.size());
    for (std::size_t k = 1; k <= t.size(); ++k) {
        if (t.relevant[k - 1]) ++tp;
        const GainPoint pt{k, static_cast<double>(k) / n, static_cast<double>(tp) / p};
        // Compare tp * N against k * P exactly instead of two rounded ratios.
        if (k > seed_prefix && tp * t.size() < k * t.positives()) g.crosses_diagonal = true;
        g.points.push_back(pt);
    }
    return g;
}

std::string gain_curve_csv(const GainCurve& curve) {
    std::string out = "screened,fraction_screened,recall,random_baseline\n";
    for (const auto& p : curve.points) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", p.screened, p.fraction, p.recall, p.fraction);
    }
    return out;
}

Trajectory parse_trajectory_csv(std::string_view text) {
    const csv::Table table = csv::parse(text);
    const auto col = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < table.header.size(); ++i) {
            if (utf8::trim(table.header[i]) == name) return i;
        }
        throw InputError(fmt::format("trajectory: missing column '{}'", name));
    };
    const std::size_t id_col = col("record_id");
    const std::size_t rel_col = col("is_relevant");
    Trajectory t;
    std::set<std::string> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string id(utf8::trim(row[id_col]));
        const std::string v = utf8::ascii_lower(utf8::trim(row[rel_col]));
        bool rel = false;
        if (v == "1" || v == "true" || v == "yes") rel = true;
        else if (v == "0" || v == "false" || v == "no") rel = false;
        else throw InputError(fmt::format("trajectory row {}: is_relevant must be 0/1, got '{}'", r + 2, row[rel_col]));
        if (id.empty()) throw InputError(fmt::format("trajectory row {}: empty record_id", r + 2));
        if (!seen.insert(id).second) throw InputError(fmt::format("trajectory row {}: duplicate record_id '{}'", r + 2, id));
        t.push(id, rel);
    }
    if (t.size() == 0) throw InputError("trajectory is empty");
    return t;
}

std::string trajectory_csv(const Trajectory& t) {
    std::string out;
    csv::write_row(out, {"record_id", "is_relevant"});
    for (std::size_t i = 0; i < t.size(); ++i) csv::write_row(out, {t.ids[i], t.relevant[i] ? "1" : "0"});
    return out;
}

}  // namespace hscan::eval

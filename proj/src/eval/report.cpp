#include "hscan/eval/report.hpp"

#include <fmt/format.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"
#include "hscan/eval/simulation.hpp"

namespace hscan::eval {

MiniReport mini_report(const Project& project, double target_recall) {
    MiniReport r;
    r.project_id = project.id;
    r.n_total = project.records.size();
    for (std::size_t i : viewed_order(project)) {
        const auto& rec = project.records[i];
        r.trajectory.push(rec.id, rec.label == Label::include);
    }
    r.n_viewed = r.trajectory.size();
    r.n_includes = r.trajectory.positives();
    r.n_excludes = r.n_viewed - r.n_includes;
    if (r.n_includes == 0) throw ConflictError("mini-report needs at least one viewed include");
    r.partial = r.n_viewed < r.n_total;
    r.metrics = compute_metrics(r.trajectory, target_recall);
    r.curve = gain_curve(r.trajectory);
    r.history = project.ranking_history;
    return r;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json mini_report_json(const MiniReport& r) {
    const int pct = static_cast<int>(r.metrics.target_recall * 100 + 0.5);
    nlohmann::json headline{{fmt::format("wss@{}", pct), r.metrics.wss},
                            {fmt::format("nwss@{}", pct), optional_number(r.metrics.tnr)},
                            {"recall@50", r.metrics.recall_at[0]},
                            {"recall@75", r.metrics.recall_at[1]}};
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.curve.points) points.push_back({p.screened, p.fraction, p.recall});
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : r.history) history.push_back(to_json(h));
    return nlohmann::json{
        {"project_id", r.project_id},
        {"based_on_partially_screened_data", r.partial},
        {"note", r.partial ? "Metrics treat the viewed records as the complete dataset; unviewed records are ignored."
                           : "All records have been screened."},
        {"n_total", r.n_total},
        {"n_viewed", r.n_viewed},
        {"n_includes", r.n_includes},
        {"n_excludes", r.n_excludes},
        {"headline", std::move(headline)},
        {"metrics", metrics_json(r.metrics)},
        {"crossing_flag", r.curve.crosses_diagonal},
        {"gain_curve", {{"columns", {"screened", "fraction_screened", "recall"}}, {"points", std::move(points)}}},
        {"ranker_history", std::move(history)},
    };
}

std::string mini_report_text(const MiniReport& r) {
    const int pct = static_cast<int>(r.metrics.target_recall * 100 + 0.5);
    std::string out = fmt::format("Mini-report for project {}\n", r.project_id);
    if (r.partial) {
        out += fmt::format("Based on partially screened data: {} of {} records viewed.\n", r.n_viewed, r.n_total);
    }
    out += fmt::format("Viewed: {} ({} includes, {} excludes)\n", r.n_viewed, r.n_includes, r.n_excludes);
    out += fmt::format("WSS@{}: {:.4f}\n", pct, r.metrics.wss);
    out += r.metrics.tnr ? fmt::format("nWSS@{}: {:.4f}\n", pct, *r.metrics.tnr) : fmt::format("nWSS@{}: n/a\n", pct);
    out += fmt::format("Recall@50%: {:.4f}\nRecall@75%: {:.4f}\n", r.metrics.recall_at[0], r.metrics.recall_at[1]);
    out += fmt::format("Average precision: {:.4f}\nLast include after {:.1f}% viewed\n", r.metrics.average_precision,
                       r.metrics.last_include_pct);
    if (r.curve.crosses_diagonal) {
        out += "WARNING: the gain curve falls below the random-sampling diagonal; review all records.\n";
    }
    if (!r.history.empty()) {
        out += "Reranks:\n";
        for (const auto& h : r.history) {
            out += fmt::format("  {:>3}  {:<12} seeds={} ranked={}", h.iteration, to_string(h.ranker_used), h.n_seeds,
                               h.n_ranked);
            if (h.ranker_used == RankerKind::sgd) {
                out += fmt::format(" train={}+{}", h.training_includes, h.training_excludes);
            }
            if (h.sgd_fallback) out += " (classifier fallback)";
            out += "\n";
        }
    }
    return out;
}

}  // namespace hscan::eval

#include "hscan/eval/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"

namespace hscan::eval {

std::string_view to_string(RankerMode m) {
    switch (m) {
        case RankerMode::aidoc: return "aidoc";
        case RankerMode::oracle: return "oracle";
        case RankerMode::random: return "random";
    }
    return "aidoc";
}

std::optional<RankerMode> parse_ranker_mode(std::string_view s) {
    for (auto m : {RankerMode::aidoc, RankerMode::oracle, RankerMode::random}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

void SimulationConfig::validate() const {
    if (n_runs < 1) throw InputError("runs must be >= 1");
    if (batch_size < 1) throw InputError("batch size must be >= 1");
    if (n_seeds && *n_seeds < 1) throw InputError("seeds must be >= 1");
    if (jobs < 1) throw InputError("jobs must be >= 1");
    if (!(target_recall > 0.0 && target_recall <= 1.0)) throw InputError("target recall must be in (0, 1]");
    ranker.validate();
}

std::size_t SimulationConfig::seeds_for(std::size_t positives) const {
    if (n_seeds) return *n_seeds;
    return positives < kFewPositivesThreshold ? 1 : kDefaultSeeds;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
}

Dataset Dataset::from_project(const Project& project) {
    Dataset d;
    for (const auto& r : project.records) {
        if (r.label == Label::unlabeled) {
            throw InputError(fmt::format("record '{}' has no gold label; simulation needs a fully labeled dataset", r.id));
        }
        d.ids.push_back(r.id);
        d.texts.push_back(r.model_text());
        d.relevant.push_back(r.label == Label::include);
    }
    return d;
}

std::uint64_t run_seed(std::uint64_t base, std::size_t run_index) {
    // splitmix64 of the pair, so neighbouring runs get unrelated streams.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(run_index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RunResult simulate_run(const ranking::Corpus& corpus, const Dataset& data, const SimulationConfig& config,
                       std::size_t run_index) {
    const std::size_t n = data.size();
    if (corpus.size() != n) throw InputError("simulation: corpus and dataset differ in size");
    const std::size_t p = data.positives();

    RunResult run;
    run.run = run_index;
    run.seed = run_seed(config.rng_seed, run_index);
    run.n_seeds = config.seeds_for(p);
    if (p < run.n_seeds) {
        throw InputError(fmt::format("dataset has {} relevant records; {} seeds requested", p, run.n_seeds));
    }
    if (p == n) throw InputError("dataset has no irrelevant records");

    ranking::Rng rng(run.seed);
    std::vector<std::size_t> shuffled(n);
    std::iota(shuffled.begin(), shuffled.end(), std::size_t{0});
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<std::size_t> tie_rank(n);
    for (std::size_t pos = 0; pos < n; ++pos) tie_rank[shuffled[pos]] = pos;

    std::vector<std::size_t> positives;
    for (std::size_t i : shuffled) {
        if (data.relevant[i]) positives.push_back(i);
    }
    std::vector<Label> labels(n, Label::unlabeled);
    for (std::size_t s : ranking::select_seeds(positives, run.n_seeds, rng)) {
        labels[s] = Label::include;
        run.trajectory.push(data.ids[s], true);
    }

    std::vector<std::optional<int>> bits;
    if (config.ranker.llm_enabled && config.llm_bits) {
        bits.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (auto it = config.llm_bits->find(data.ids[i]); it != config.llm_bits->end()) bits[i] = it->second;
        }
    }

    std::size_t remaining = n - run.n_seeds;
    int iteration = 0;
    std::vector<std::size_t> next;
    while (remaining > 0) {
        ++iteration;
        next.clear();
        if (config.mode == RankerMode::aidoc) {
            const auto out = ranking::rerank_pool(corpus, labels, tie_rank, iteration, config.ranker, rng, bits);
            for (std::size_t k : out.ranking.order) next.push_back(out.ranking.pool[k]);
            const auto& final_scores = out.ranking.combined.empty() ? out.ranking.scores01 : out.ranking.combined;
            const auto [lo, hi] = std::minmax_element(final_scores.begin(), final_scores.end());
            run.reranks.push_back(RerankLog{
                .iteration = iteration,
                .ranker_used = out.state.ranker_used,
                .n_seeds = out.state.seeds_used.size(),
                .sgd_fallback = out.state.sgd_fallback,
                .training_includes = out.state.training_includes,
                .training_excludes = out.state.training_excludes,
                .pool_size = out.ranking.pool.size(),
                .llm_pending = out.state.llm_pending,
                .min_score = *lo,
                .max_score = *hi,
            });
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == Label::unlabeled) next.push_back(i);
            }
            if (config.mode == RankerMode::oracle) {
                std::sort(next.begin(), next.end(), [&](std::size_t a, std::size_t b) {
                    if (data.relevant[a] != data.relevant[b]) return static_cast<bool>(data.relevant[a]);
                    return tie_rank[a] < tie_rank[b];
                });
            } else {
                std::shuffle(next.begin(), next.end(), rng);
            }
        }
        const std::size_t take = std::min(config.batch_size, remaining);
        for (std::size_t k = 0; k < take; ++k) {
            const std::size_t i = next[k];
            labels[i] = data.relevant[i] ? Label::include : Label::exclude;
            run.trajectory.push(data.ids[i], data.relevant[i]);
        }
        remaining -= take;
    }

    if (config.seeds_free) {
        run.scored.ids.assign(run.trajectory.ids.begin() + static_cast<long>(run.n_seeds), run.trajectory.ids.end());
        run.scored.relevant.assign(run.trajectory.relevant.begin() + static_cast<long>(run.n_seeds),
                                   run.trajectory.relevant.end());
    } else {
        run.scored = run.trajectory;
    }
    run.metrics = compute_metrics(run.scored, config.target_recall);
    return run;
}

SimulationResult simulate(const ranking::Corpus& corpus, const Dataset& data, const SimulationConfig& config,
                          std::string embedder_name) {
    config.validate();
    SimulationResult r;
    r.config = config;
    r.n = data.size();
    r.p = data.positives();
    r.n_seeds = config.seeds_for(r.p);
    r.embedder = std::move(embedder_name);
    if (!config.n_seeds && r.p < kFewPositivesThreshold) {
        spdlog::info("{} relevant records (< {}): using 1 seed", r.p, kFewPositivesThreshold);
    }
    r.runs.resize(config.n_runs);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < config.n_runs; i = next++) {
            try {
                r.runs[i] = simulate_run(corpus, data, config, i);
                spdlog::debug("run {}: wss {:.4f}", i + 1, r.runs[i].metrics.wss);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = config.n_runs;
            }
        }
    };
    const std::size_t n_threads = std::min(config.jobs, config.n_runs);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<Metrics> ms;
    for (const auto& run : r.runs) ms.push_back(run.metrics);
    r.aggregate = aggregate_runs(ms, config.sample_sd);
    return r;
}

nlohmann::json metrics_json(const Metrics& m) {
    nlohmann::json j{{"n", m.n},
                     {"p", m.p},
                     {"target_recall", m.target_recall},
                     {"wss", m.wss},
                     {"tnr", m.tnr ? nlohmann::json(*m.tnr) : nlohmann::json(nullptr)},
                     {"average_precision", m.average_precision},
                     {"last_include_pct", m.last_include_pct}};
    nlohmann::json rec = nlohmann::json::object();
    for (std::size_t i = 0; i < kRecallFractions.size(); ++i) {
        rec[fmt::format("{}", static_cast<int>(kRecallFractions[i] * 100 + 0.5))] = m.recall_at[i];
    }
    j["recall_at_pct_screened"] = rec;
    return j;
}

nlohmann::json aggregate_json(const AggregateMetrics& a, double target_recall) {
    const auto ms = [](const MeanSd& v) { return nlohmann::json{{"mean", v.mean}, {"sd", v.sd}}; };
    nlohmann::json rec = nlohmann::json::object();
    for (std::size_t i = 0; i < kRecallFractions.size(); ++i) {
        rec[fmt::format("{}", static_cast<int>(kRecallFractions[i] * 100 + 0.5))] = ms(a.recall_at[i]);
    }
    return nlohmann::json{{"runs", a.runs},
                          {"target_recall", target_recall},
                          {"wss", ms(a.wss)},
                          {"tnr", ms(a.tnr)},
                          {"recall_at_pct_screened", rec},
                          {"average_precision", ms(a.average_precision)},
                          {"last_include_pct", ms(a.last_include_pct)}};
}

nlohmann::json manifest_json(const SimulationResult& r) {
    const auto& c = r.config;
    nlohmann::json protocol{
        {"n_runs", c.n_runs},
        {"n_seeds", r.n_seeds},
        {"n_seeds_rule", c.n_seeds ? "explicit" : fmt::format("auto: {}, or 1 when fewer than {} relevant records",
                                                              kDefaultSeeds, kFewPositivesThreshold)},
        {"seeds_count_as_screened", !c.seeds_free},
        {"batch_size", c.batch_size},
        {"sgd_period", c.ranker.sgd_period == ranking::kSgdDisabled ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(c.ranker.sgd_period)},
        {"max_seeds", c.ranker.max_seeds},
        {"neg_ratio", c.ranker.neg_ratio},
        {"llm_enabled", c.ranker.llm_enabled && c.llm_bits.has_value()},
        {"ranker_mode", to_string(c.mode)},
        {"rng_seed", c.rng_seed},
        {"target_recall", c.target_recall},
        {"sd", c.sample_sd ? "sample" : "population"},
        {"sgd", {{"l2_alpha", c.ranker.sgd.l2_alpha},
                 {"max_epochs", c.ranker.sgd.max_epochs},
                 {"tolerance", c.ranker.sgd.tolerance},
                 {"n_iter_no_change", c.ranker.sgd.n_iter_no_change}}},
    };
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : r.runs) {
        nlohmann::json reranks = nlohmann::json::array();
        for (const auto& l : run.reranks) {
            reranks.push_back({{"iteration", l.iteration},
                               {"ranker", to_string(l.ranker_used)},
                               {"n_seeds", l.n_seeds},
                               {"sgd_fallback", l.sgd_fallback},
                               {"training_includes", l.training_includes},
                               {"training_excludes", l.training_excludes},
                               {"pool_size", l.pool_size},
                               {"llm_pending", l.llm_pending},
                               {"min_score", l.min_score},
                               {"max_score", l.max_score}});
        }
        runs.push_back({{"run", run.run + 1},
                        {"seed", run.seed},
                        {"n_seeds", run.n_seeds},
                        {"metrics", metrics_json(run.metrics)},
                        {"reranks", std::move(reranks)}});
    }
    return nlohmann::json{{"protocol", std::move(protocol)},
                          {"dataset", {{"n", r.n}, {"p", r.p}}},
                          {"embedder", r.embedder},
                          {"runs", std::move(runs)},
                          {"aggregate", aggregate_json(r.aggregate, c.target_recall)}};
}

std::string runs_csv(const SimulationResult& r) {
    std::string out = "run,seed,n_seeds,n,p,wss,tnr,recall_50,recall_75,recall_90,recall_95,average_precision,"
                      "last_include_pct\n";
    for (const auto& run : r.runs) {
        const Metrics& m = run.metrics;
        out += fmt::format("{},{},{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.4f}\n", run.run + 1,
                           run.seed, run.n_seeds, m.n, m.p, m.wss, m.tnr ? fmt::format("{:.6f}", *m.tnr) : "",
                           m.recall_at[0], m.recall_at[1], m.recall_at[2], m.recall_at[3], m.average_precision,
                           m.last_include_pct);
    }
    return out;
}

std::string aggregate_text(const SimulationResult& r) {
    const auto& a = r.aggregate;
    const int pct = static_cast<int>(r.config.target_recall * 100 + 0.5);
    std::string out = fmt::format("N={} P={} runs={} seeds={} batch={} ranker={}", r.n, r.p, a.runs, r.n_seeds,
                                  r.config.batch_size, to_string(r.config.mode));
    if (!r.embedder.empty()) out += fmt::format(" embedder={}", r.embedder);
    out += "\n";
    const auto line = [&](std::string_view name, const MeanSd& v) {
        out += fmt::format("{:<22}{:>8.4f} ± {:.4f}\n", name, v.mean, v.sd);
    };
    line(fmt::format("WSS@{}", pct), a.wss);
    line(fmt::format("TNR@{}", pct), a.tnr);
    for (std::size_t i = 0; i < kRecallFractions.size(); ++i) {
        line(fmt::format("Recall@{}% screened", static_cast<int>(kRecallFractions[i] * 100 + 0.5)), a.recall_at[i]);
    }
    line("Average precision", a.average_precision);
    line("Last include (%)", a.last_include_pct);
    return out;
}

void write_simulation(const SimulationResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "runs.csv", runs_csv(r));
    write_file(dir / "aggregate.json", aggregate_json(r.aggregate, r.config.target_recall).dump(2) + "\n");
    write_file(dir / "report.txt", aggregate_text(r));
    write_file(dir / "manifest.json", manifest_json(r).dump(2) + "\n");
    const std::size_t seed_prefix = r.config.seeds_free ? 0 : r.n_seeds;
    for (const auto& run : r.runs) {
        const std::string tag = fmt::format("{:02}", run.run + 1);
        write_file(dir / fmt::format("trajectory_{}.csv", tag), trajectory_csv(run.trajectory));
        write_file(dir / fmt::format("gain_curve_{}.csv", tag), gain_curve_csv(gain_curve(run.scored, seed_prefix)));
    }
}

}  // namespace hscan::eval

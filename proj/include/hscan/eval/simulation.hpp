#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hscan/core/types.hpp"
#include "hscan/eval/metrics.hpp"
#include "hscan/ranking/ranking.hpp"
#include "json.hpp"

namespace hscan::eval {

/// How the unlabeled pool is ordered between batches. `oracle` and `random`
/// are reference rankers for sanity checks.
enum class RankerMode { aidoc, oracle, random };

std::string_view to_string(RankerMode m);
std::optional<RankerMode> parse_ranker_mode(std::string_view s);

inline constexpr std::size_t kDefaultSeeds = 5;
inline constexpr std::size_t kFewPositivesThreshold = 30;

struct SimulationConfig {
    std::size_t n_runs = 15;
    std::optional<std::size_t> n_seeds;  ///< empty: 5, or 1 when fewer than 30 relevant records
    std::size_t batch_size = 10;
    std::uint64_t rng_seed = 42;
    ranking::EnsembleConfig ranker;
    std::optional<std::map<std::string, int>> llm_bits;
    RankerMode mode = RankerMode::aidoc;
    bool seeds_free = false;  ///< drop seeds from the scored trajectory
    bool sample_sd = false;
    std::size_t jobs = 1;
    double target_recall = 0.95;

    void validate() const;
    std::size_t seeds_for(std::size_t positives) const;
};

/// Gold-labeled records, index-aligned with a Corpus.
struct Dataset {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    std::vector<bool> relevant;

    std::size_t size() const { return ids.size(); }
    std::size_t positives() const;

    /// Every record must carry an include or exclude label.
    static Dataset from_project(const Project& project);
};

struct RerankLog {
    int iteration = 0;
    RankerKind ranker_used = RankerKind::similarity;
    std::size_t n_seeds = 0;
    bool sgd_fallback = false;
    std::size_t training_includes = 0;
    std::size_t training_excludes = 0;
    std::size_t pool_size = 0;
    std::size_t llm_pending = 0;
    double min_score = 0.0;  ///< final (combined if any) score range over the pool
    double max_score = 0.0;
};

struct RunResult {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t n_seeds = 0;
    Trajectory trajectory;  ///< full screening order, seeds first
    Trajectory scored;      ///< what metrics were computed on
    std::vector<RerankLog> reranks;
    Metrics metrics;
};

/// One simulated screening. `corpus` must be index-aligned with `data`.
RunResult simulate_run(const ranking::Corpus& corpus, const Dataset& data, const SimulationConfig& config,
                       std::size_t run_index);

struct SimulationResult {
    SimulationConfig config;
    std::size_t n = 0;
    std::size_t p = 0;
    std::size_t n_seeds = 0;
    std::string embedder;
    std::vector<RunResult> runs;
    AggregateMetrics aggregate;
};

SimulationResult simulate(const ranking::Corpus& corpus, const Dataset& data, const SimulationConfig& config,
                          std::string embedder_name = "");

/// Per-run seed derived from the base seed and the run index.
std::uint64_t run_seed(std::uint64_t base, std::size_t run_index);

nlohmann::json manifest_json(const SimulationResult& r);
nlohmann::json aggregate_json(const AggregateMetrics& a, double target_recall);
nlohmann::json metrics_json(const Metrics& m);
std::string runs_csv(const SimulationResult& r);
std::string aggregate_text(const SimulationResult& r);

/// Writes runs.csv, aggregate.json, report.txt, manifest.json, and
/// trajectory_NN.csv / gain_curve_NN.csv per run.
void write_simulation(const SimulationResult& r, const std::filesystem::path& dir);

}  // namespace hscan::eval

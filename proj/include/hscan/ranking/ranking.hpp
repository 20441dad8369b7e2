#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hscan/core/types.hpp"
#include "hscan/embedding/embedding.hpp"
#include "hscan/ranking/sgd.hpp"

namespace hscan::ranking {

inline constexpr int kSgdDisabled = std::numeric_limits<int>::max();

struct EnsembleConfig {
    int sgd_period = 5;         ///< every n-th rerank uses the classifier; kSgdDisabled for never
    std::size_t max_seeds = 10;
    std::size_t neg_ratio = 3;  ///< excludes per include in the classifier's training set
    bool llm_enabled = false;
    SgdHyperparams sgd;

    void validate() const;
};

/// Texts and embeddings for a fixed record set, indexed 0..n-1. Records
/// with empty text carry an empty embedding and always score lowest.
class Corpus {
public:
    Corpus(std::vector<std::string> ids, std::vector<std::string> texts, embedding::Backend& backend);

    static Corpus from_records(std::span<const RecordItem> records, embedding::Backend& backend);

    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::string& text(std::size_t i) const { return texts_[i]; }
    const embedding::Vector& vector(std::size_t i) const { return vectors_[i]; }
    bool has_text(std::size_t i) const { return !vectors_[i].empty(); }

    /// Cosine between two records; cached as a full matrix for corpora up to
    /// `kMatrixLimit` records.
    double similarity(std::size_t a, std::size_t b) const;

    static constexpr std::size_t kMatrixLimit = 6000;

private:
    std::vector<std::string> ids_;
    std::vector<std::string> texts_;
    std::vector<embedding::Vector> vectors_;
    std::optional<embedding::SimilarityMatrix> matrix_;
};

/// Uniform sample without replacement of min(|included|, max_seeds) items.
std::vector<std::size_t> select_seeds(std::span<const std::size_t> included, std::size_t max_seeds, Rng& rng);

/// Training rows for the classifier: all includes plus a uniform sample of
/// min(|excludes|, neg_ratio·|includes|) excludes.
struct TrainingSet {
    std::vector<std::size_t> includes;
    std::vector<std::size_t> excludes;
    std::size_t size() const { return includes.size() + excludes.size(); }
};
TrainingSet sample_training_set(std::span<const std::size_t> includes, std::span<const std::size_t> excludes,
                                std::size_t neg_ratio, Rng& rng);

/// Scored pool. `scores` is parallel to `pool`. Ordering is descending by
/// score with ties broken by ascending `tie_rank` (the import position).
struct PoolRanking {
    std::vector<std::size_t> pool;
    std::vector<double> scores01;
    std::vector<double> combined;  ///< empty unless the llm ensemble ran
    std::vector<std::size_t> order;  ///< indices into `pool`, best first
};

/// Mean cosine to the seeds, mapped through (c + 1) / 2 onto [0, 1].
PoolRanking rank_by_similarity(const Corpus& corpus, std::span<const std::size_t> pool,
                               std::span<const std::size_t> seeds, std::span<const std::size_t> tie_rank);

PoolRanking rank_by_classifier(const Corpus& corpus, std::span<const std::size_t> pool,
                               const SgdClassifier& classifier, std::span<const std::size_t> tie_rank);

struct RankerChoice {
    RankerKind kind = RankerKind::similarity;
    bool fallback = false;  ///< classifier was due but could not be trained
};

/// Classifier on iterations divisible by the period, similarity otherwise.
/// Falls back to similarity when no excludes exist yet.
RankerChoice next_ranker(int iteration, const EnsembleConfig& config, bool has_excludes = true);

/// combined = score + bit. Ids without a bit count as 0 and are tallied in
/// `pending`.
std::map<std::string, double> combine_llm(const std::map<std::string, double>& scores01,
                                          const std::map<std::string, int>& llm_bits, std::size_t* pending = nullptr);

/// Applies combine_llm to a pool ranking in place and reorders it.
void combine_llm(PoolRanking& ranking, std::span<const std::optional<int>> bits_by_record,
                 std::span<const std::size_t> tie_rank, std::size_t* pending = nullptr);

/// One rerank of an index-addressed label state. `labels` and `tie_rank`
/// are parallel to the corpus; `llm_bits` (optional) too.
struct RerankOutcome {
    PoolRanking ranking;
    RankingState state;
};
RerankOutcome rerank_pool(const Corpus& corpus, std::span<const Label> labels, std::span<const std::size_t> tie_rank,
                          int iteration, const EnsembleConfig& config, Rng& rng,
                          std::span<const std::optional<int>> llm_bits = {});

/// Project-level rerank: increments the iteration, records the state in the
/// project history and stores scores on the records. With llm enabled and no
/// explicit bits, the records' own llm bits are used.
RankingState rerank(Project& project, const EnsembleConfig& config, Rng& rng, const Corpus& corpus,
                    const std::map<std::string, int>* llm_bits = nullptr);
RankingState rerank(Project& project, const EnsembleConfig& config, Rng& rng, embedding::Backend& backend,
                    const std::map<std::string, int>* llm_bits = nullptr);

}  // namespace hscan::ranking

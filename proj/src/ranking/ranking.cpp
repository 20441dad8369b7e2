#include "hscan/ranking/ranking.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/utf8.hpp"

namespace hscan::ranking {

void EnsembleConfig::validate() const {
    if (sgd_period < 2) throw InputError(fmt::format("sgd_period must be >= 2, got {}", sgd_period));
    if (max_seeds < 1) throw InputError("max_seeds must be >= 1");
    if (neg_ratio < 1) throw InputError("neg_ratio must be >= 1");
}

Corpus::Corpus(std::vector<std::string> ids, std::vector<std::string> texts, embedding::Backend& backend)
    : ids_(std::move(ids)), texts_(std::move(texts)), vectors_(ids_.size()) {
    if (ids_.size() != texts_.size()) throw InputError("corpus: ids and texts differ in length");
    std::vector<std::string> to_embed;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < texts_.size(); ++i) {
        if (utf8::trim(texts_[i]).empty()) continue;
        to_embed.push_back(texts_[i]);
        where.push_back(i);
    }
    if (!to_embed.empty()) {
        auto vecs = embedding::embed(backend, to_embed);
        for (std::size_t k = 0; k < where.size(); ++k) vectors_[where[k]] = std::move(vecs[k]);
    }
    if (to_embed.size() == ids_.size() && !ids_.empty() && ids_.size() <= kMatrixLimit) {
        matrix_ = embedding::similarity_matrix(vectors_);
    }
}

Corpus Corpus::from_records(std::span<const RecordItem> records, embedding::Backend& backend) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(records.size());
    texts.reserve(records.size());
    for (const auto& r : records) {
        ids.push_back(r.id);
        texts.push_back(r.model_text());
    }
    return Corpus(std::move(ids), std::move(texts), backend);
}

double Corpus::similarity(std::size_t a, std::size_t b) const {
    if (matrix_) return (*matrix_)(a, b);
    return embedding::cosine_similarity(vectors_[a], vectors_[b]);
}

std::vector<std::size_t> select_seeds(std::span<const std::size_t> included, std::size_t max_seeds, Rng& rng) {
    if (included.empty()) throw InputError("select_seeds: no included records");
    std::vector<std::size_t> pool(included.begin(), included.end());
    const std::size_t k = std::min(max_seeds, pool.size());
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

TrainingSet sample_training_set(std::span<const std::size_t> includes, std::span<const std::size_t> excludes,
                                std::size_t neg_ratio, Rng& rng) {
    TrainingSet set;
    set.includes.assign(includes.begin(), includes.end());
    const std::size_t cap = neg_ratio * includes.size();
    if (excludes.size() <= cap) {
        set.excludes.assign(excludes.begin(), excludes.end());
    } else {
        set.excludes = select_seeds(excludes, cap, rng);
    }
    return set;
}

namespace {

void order_by_score(PoolRanking& r, const std::vector<double>& score, std::span<const std::size_t> tie_rank) {
    r.order.resize(r.pool.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    const auto tie = [&](std::size_t k) { return tie_rank.empty() ? r.pool[k] : tie_rank[r.pool[k]]; };
    std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return tie(a) < tie(b);
    });
}

}  // namespace

PoolRanking rank_by_similarity(const Corpus& corpus, std::span<const std::size_t> pool,
                               std::span<const std::size_t> seeds, std::span<const std::size_t> tie_rank) {
    if (seeds.empty()) throw InputError("rank_by_similarity: no seeds");
    std::vector<std::size_t> usable;
    for (std::size_t s : seeds) {
        if (corpus.has_text(s)) usable.push_back(s);
    }
    if (usable.empty()) throw InputError("rank_by_similarity: no seed has reference text");

    PoolRanking r;
    r.pool.assign(pool.begin(), pool.end());
    r.scores01.resize(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const std::size_t i = pool[k];
        if (!corpus.has_text(i)) {
            r.scores01[k] = 0.0;
            continue;
        }
        double sum = 0.0;
        for (std::size_t s : usable) sum += corpus.similarity(i, s);
        const double mean = sum / static_cast<double>(usable.size());
        r.scores01[k] = std::clamp((mean + 1.0) / 2.0, 0.0, 1.0);
    }
    order_by_score(r, r.scores01, tie_rank);
    return r;
}

PoolRanking rank_by_classifier(const Corpus& corpus, std::span<const std::size_t> pool,
                               const SgdClassifier& classifier, std::span<const std::size_t> tie_rank) {
    PoolRanking r;
    r.pool.assign(pool.begin(), pool.end());
    r.scores01.resize(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) r.scores01[k] = classifier.probability(corpus.text(pool[k]));
    order_by_score(r, r.scores01, tie_rank);
    return r;
}

RankerChoice next_ranker(int iteration, const EnsembleConfig& config, bool has_excludes) {
    if (iteration < 1) throw InputError(fmt::format("iteration must be >= 1, got {}", iteration));
    if (config.sgd_period == kSgdDisabled || iteration % config.sgd_period != 0) return {RankerKind::similarity, false};
    if (!has_excludes) {
        spdlog::debug("rerank {}: classifier due but no excludes labeled yet; using similarity", iteration);
        return {RankerKind::similarity, true};
    }
    return {RankerKind::sgd, false};
}

std::map<std::string, double> combine_llm(const std::map<std::string, double>& scores01,
                                          const std::map<std::string, int>& llm_bits, std::size_t* pending) {
    std::map<std::string, double> out;
    std::size_t missing = 0;
    for (const auto& [id, s] : scores01) {
        auto it = llm_bits.find(id);
        int bit = 0;
        if (it == llm_bits.end()) ++missing;
        else bit = it->second != 0 ? 1 : 0;
        out.emplace(id, s + bit);
    }
    if (pending) *pending = missing;
    return out;
}

void combine_llm(PoolRanking& ranking, std::span<const std::optional<int>> bits_by_record,
                 std::span<const std::size_t> tie_rank, std::size_t* pending) {
    std::size_t missing = 0;
    ranking.combined.resize(ranking.pool.size());
    for (std::size_t k = 0; k < ranking.pool.size(); ++k) {
        const auto& bit = bits_by_record[ranking.pool[k]];
        if (!bit) ++missing;
        ranking.combined[k] = ranking.scores01[k] + (bit && *bit != 0 ? 1.0 : 0.0);
    }
    if (pending) *pending = missing;
    order_by_score(ranking, ranking.combined, tie_rank);
}

RerankOutcome rerank_pool(const Corpus& corpus, std::span<const Label> labels, std::span<const std::size_t> tie_rank,
                          int iteration, const EnsembleConfig& config, Rng& rng,
                          std::span<const std::optional<int>> llm_bits) {
    config.validate();
    if (labels.size() != corpus.size()) throw InputError("rerank: label vector does not match corpus");
    std::vector<std::size_t> includes, excludes, pool;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        switch (labels[i]) {
            case Label::include: includes.push_back(i); break;
            case Label::exclude: excludes.push_back(i); break;
            case Label::unlabeled: pool.push_back(i); break;
        }
    }
    if (includes.empty()) throw ConflictError("rerank requires at least one included record");

    RerankOutcome out;
    RankingState& state = out.state;
    state.iteration = iteration;
    const RankerChoice choice = next_ranker(iteration, config, !excludes.empty());
    state.sgd_fallback = choice.fallback;

    if (choice.kind == RankerKind::sgd) {
        const TrainingSet set = sample_training_set(includes, excludes, config.neg_ratio, rng);
        std::vector<std::string> texts;
        std::vector<bool> y;
        for (auto i : set.includes) {
            texts.push_back(corpus.text(i));
            y.push_back(true);
        }
        for (auto i : set.excludes) {
            texts.push_back(corpus.text(i));
            y.push_back(false);
        }
        const SgdClassifier clf = SgdClassifier::train(texts, y, config.sgd, rng);
        out.ranking = rank_by_classifier(corpus, pool, clf, tie_rank);
        state.ranker_used = RankerKind::sgd;
        state.training_includes = set.includes.size();
        state.training_excludes = set.excludes.size();
        spdlog::debug("rerank {}: classifier on {} includes + {} excludes, {} epochs", iteration,
                      set.includes.size(), set.excludes.size(), clf.epochs_run());
    } else {
        const auto seeds = select_seeds(includes, config.max_seeds, rng);
        out.ranking = rank_by_similarity(corpus, pool, seeds, tie_rank);
        state.ranker_used = RankerKind::similarity;
        for (auto s : seeds) state.seeds_used.push_back(corpus.id(s));
    }

    if (config.llm_enabled && !llm_bits.empty()) {
        if (llm_bits.size() != corpus.size()) throw InputError("rerank: llm bit vector does not match corpus");
        combine_llm(out.ranking, llm_bits, tie_rank, &state.llm_pending);
        state.ranker_used = RankerKind::llm_ensemble;
    }

    state.ordering.reserve(pool.size());
    for (std::size_t k : out.ranking.order) state.ordering.push_back(corpus.id(out.ranking.pool[k]));
    for (std::size_t k = 0; k < out.ranking.pool.size(); ++k) {
        const std::string& id = corpus.id(out.ranking.pool[k]);
        state.scores01.emplace(id, out.ranking.scores01[k]);
        if (!out.ranking.combined.empty()) state.combined.emplace(id, out.ranking.combined[k]);
    }
    return out;
}

RankingState rerank(Project& project, const EnsembleConfig& config, Rng& rng, const Corpus& corpus,
                    const std::map<std::string, int>* llm_bits) {
    if (corpus.size() != project.records.size()) throw InputError("rerank: corpus does not match project");
    std::vector<Label> labels;
    labels.reserve(project.records.size());
    for (const auto& r : project.records) labels.push_back(r.label);

    std::vector<std::optional<int>> bits;
    if (config.llm_enabled) {
        bits.resize(project.records.size());
        bool any = false;
        for (std::size_t i = 0; i < project.records.size(); ++i) {
            const auto& rec = project.records[i];
            if (llm_bits) {
                if (auto it = llm_bits->find(rec.id); it != llm_bits->end()) bits[i] = it->second != 0 ? 1 : 0;
            } else {
                bits[i] = rec.llm_bit;
            }
            any = any || bits[i].has_value();
        }
        if (!any) {
            spdlog::info("llm ensemble enabled but no judgements available; ranking without it");
            bits.clear();
        }
    }

    const int iteration = project.current_iteration() + 1;
    RerankOutcome out = rerank_pool(corpus, labels, {}, iteration, config, rng, bits);

    for (auto& rec : project.records) rec.current_score.reset();
    const auto& r = out.ranking;
    for (std::size_t k = 0; k < r.pool.size(); ++k) {
        project.records[r.pool[k]].current_score = r.combined.empty() ? r.scores01[k] : r.combined[k];
    }
    project.ranking_history.push_back(summarize(out.state));
    project.latest_ranking = out.state;
    return out.state;
}

RankingState rerank(Project& project, const EnsembleConfig& config, Rng& rng, embedding::Backend& backend,
                    const std::map<std::string, int>* llm_bits) {
    const Corpus corpus = Corpus::from_records(project.records, backend);
    return rerank(project, config, rng, corpus, llm_bits);
}

}  // namespace hscan::ranking

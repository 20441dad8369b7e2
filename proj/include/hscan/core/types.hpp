#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hscan {

enum class SourceKind { news, trial_registry, funding_call, journal_article, other };
enum class Label { unlabeled, include, exclude };
enum class LabelSource { human, gold_import };
enum class RankerKind { similarity, sgd, llm_ensemble };

std::string_view to_string(SourceKind k);
std::string_view to_string(Label l);
std::string_view to_string(LabelSource s);
std::string_view to_string(RankerKind k);

std::optional<SourceKind> parse_source_kind(std::string_view s);
std::optional<Label> parse_label(std::string_view s);
std::optional<LabelSource> parse_label_source(std::string_view s);
std::optional<RankerKind> parse_ranker_kind(std::string_view s);

/// Column name → cell text, in original header order.
using Metadata = std::vector<std::pair<std::string, std::string>>;

const std::string* find_cell(const Metadata& m, std::string_view column);

struct RecordItem {
    std::string id;
    std::string title;
    std::string reference_text;
    SourceKind source_kind = SourceKind::other;
    Metadata metadata;
    Label label = Label::unlabeled;
    LabelSource label_source = LabelSource::human;
    std::optional<int> llm_bit;
    std::optional<double> current_score;

    /// Text fed to the embedder and the classifier.
    std::string model_text() const;
};

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct LabelEvent {
    std::string record_id;
    Label new_label = Label::unlabeled;
    Timestamp timestamp{};
    int rerank_iteration_at_time = 0;
};

/// Outcome of one re-ranking of the unlabeled pool.
struct RankingState {
    int iteration = 0;
    std::vector<std::string> ordering;  ///< unlabeled record ids, best first
    std::map<std::string, double> scores01;  ///< base ranker score in [0, 1]
    std::map<std::string, double> combined;  ///< base + llm bit in [0, 2]; empty without llm
    RankerKind ranker_used = RankerKind::similarity;
    std::vector<std::string> seeds_used;
    bool sgd_fallback = false;      ///< sgd was due but no excludes existed
    std::size_t training_includes = 0;
    std::size_t training_excludes = 0;
    std::size_t llm_pending = 0;    ///< records scored without an llm bit
};

/// Compact provenance kept for every rerank.
struct RankingSummary {
    int iteration = 0;
    RankerKind ranker_used = RankerKind::similarity;
    std::size_t n_seeds = 0;
    bool sgd_fallback = false;
    std::size_t training_includes = 0;
    std::size_t training_excludes = 0;
    std::size_t n_ranked = 0;
};

RankingSummary summarize(const RankingState& state);

struct ImportMapping {
    std::string text_column;
    std::optional<std::string> label_column;
    std::optional<std::string> positive_value;
    std::optional<std::string> title_column;
    std::optional<std::string> id_column;
    SourceKind source_kind = SourceKind::other;
    std::size_t truncate_to = 2000;
    bool truncate = true;
};

struct Project {
    std::string id;
    std::vector<RecordItem> records;
    std::string label_column_name;
    std::string label_positive_value;
    std::string text_column_name;
    ImportMapping mapping;
    std::vector<LabelEvent> label_events;
    std::vector<RankingSummary> ranking_history;
    std::optional<RankingState> latest_ranking;

    int current_iteration() const {
        return ranking_history.empty() ? 0 : ranking_history.back().iteration;
    }
    /// Index into `records`, or nullopt.
    std::optional<std::size_t> index_of(std::string_view record_id) const;
    std::size_t count(Label l) const;
};

}  // namespace hscan

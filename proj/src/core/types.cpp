#include "hscan/core/types.hpp"

#include <algorithm>
#include <array>

namespace hscan {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view s) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum v) {
    for (const auto& [value, name] : table) {
        if (value == v) return name;
    }
    return "?";
}

constexpr std::array<std::pair<SourceKind, std::string_view>, 5> kSourceKinds{{
    {SourceKind::news, "news"},
    {SourceKind::trial_registry, "trial_registry"},
    {SourceKind::funding_call, "funding_call"},
    {SourceKind::journal_article, "journal_article"},
    {SourceKind::other, "other"},
}};

constexpr std::array<std::pair<Label, std::string_view>, 3> kLabels{{
    {Label::unlabeled, "unlabeled"},
    {Label::include, "include"},
    {Label::exclude, "exclude"},
}};

constexpr std::array<std::pair<LabelSource, std::string_view>, 2> kLabelSources{{
    {LabelSource::human, "human"},
    {LabelSource::gold_import, "gold_import"},
}};

constexpr std::array<std::pair<RankerKind, std::string_view>, 3> kRankers{{
    {RankerKind::similarity, "similarity"},
    {RankerKind::sgd, "sgd"},
    {RankerKind::llm_ensemble, "llm_ensemble"},
}};

}  // namespace

std::string_view to_string(SourceKind k) { return name_of(kSourceKinds, k); }
std::string_view to_string(Label l) { return name_of(kLabels, l); }
std::string_view to_string(LabelSource s) { return name_of(kLabelSources, s); }
std::string_view to_string(RankerKind k) { return name_of(kRankers, k); }

std::optional<SourceKind> parse_source_kind(std::string_view s) { return lookup(kSourceKinds, s); }
std::optional<Label> parse_label(std::string_view s) { return lookup(kLabels, s); }
std::optional<LabelSource> parse_label_source(std::string_view s) { return lookup(kLabelSources, s); }
std::optional<RankerKind> parse_ranker_kind(std::string_view s) { return lookup(kRankers, s); }

const std::string* find_cell(const Metadata& m, std::string_view column) {
    for (const auto& [name, value] : m) {
        if (name == column) return &value;
    }
    return nullptr;
}

std::string RecordItem::model_text() const {
    if (title.empty()) return reference_text;
    if (reference_text.empty() || reference_text == title) return title;
    return title + " " + reference_text;
}

RankingSummary summarize(const RankingState& state) {
    return RankingSummary{
        .iteration = state.iteration,
        .ranker_used = state.ranker_used,
        .n_seeds = state.seeds_used.size(),
        .sgd_fallback = state.sgd_fallback,
        .training_includes = state.training_includes,
        .training_excludes = state.training_excludes,
        .n_ranked = state.ordering.size(),
    };
}

std::optional<std::size_t> Project::index_of(std::string_view record_id) const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].id == record_id) return i;
    }
    return std::nullopt;
}

std::size_t Project::count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [l](const RecordItem& r) { return r.label == l; }));
}

}  // namespace hscan

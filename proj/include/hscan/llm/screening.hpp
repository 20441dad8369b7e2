#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hscan/core/types.hpp"
#include "hscan/llm/prompt.hpp"
#include "hscan/llm/provider.hpp"
#include "hscan/scanar/clock.hpp"

namespace hscan::llm {

struct LLMJudgement {
    std::string record_id;
    int bit = 0;
    std::string justification;
    std::string model_id;
    std::string prompt_hash;
    std::string raw_response;
    ParseStatus parse_status = ParseStatus::defaulted;
    std::string error;  ///< set only for defaulted_on_error
    int attempts = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    Duration initial_backoff{3000};
    double multiplier = 2.0;
};

struct BatchConfig {
    std::size_t max_concurrency = 4;
    RetryPolicy retry;
    Duration min_interval{0};  ///< spacing between request starts, across all workers
    Clock* clock = nullptr;    ///< defaults to a SystemClock
};

/// Called after each finished record with (done, total).
using BatchProgress = std::function<void(std::size_t, std::size_t)>;

/// One judgement per record, in input order. Provider failures after the
/// last retry give bit 0 with status defaulted_on_error; the batch itself
/// never throws for a single record.
std::vector<LLMJudgement> classify_batch(std::span<const RecordItem> records, const PromptTemplate& tmpl,
                                         ChatProvider& provider, const BatchConfig& config,
                                         const BatchProgress& progress = {});

struct JudgementCounts {
    std::size_t total = 0;
    std::size_t yes = 0;
    std::size_t clean = 0;
    std::size_t salvaged = 0;
    std::size_t defaulted = 0;
    std::size_t errors = 0;
};
JudgementCounts count(std::span<const LLMJudgement> judgements);

std::map<std::string, int> bits_of(std::span<const LLMJudgement> judgements);

/// Judgement file: {"judgements": {"<record id>": {...}}}. The loader also
/// accepts a bare {"<record id>": 0|1} map.
nlohmann::json judgements_to_json(std::span<const LLMJudgement> judgements);
std::vector<LLMJudgement> judgements_from_json(const nlohmann::json& j);
void save_judgements(std::span<const LLMJudgement> judgements, const std::filesystem::path& path);
std::vector<LLMJudgement> load_judgements(const std::filesystem::path& path);

}  // namespace hscan::llm

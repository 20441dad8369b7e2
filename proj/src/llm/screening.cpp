#include "hscan/llm/screening.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"

namespace hscan::llm {

namespace {

// IntervalGate shared by worker threads.
class RateLimiter {
public:
    RateLimiter(Clock& clock, Duration interval) : gate_(clock, interval) {}
    void wait() {
        std::lock_guard lock(mutex_);
        gate_.wait();
    }

private:
    std::mutex mutex_;
    IntervalGate gate_;
};

LLMJudgement classify_one(const RecordItem& record, const PromptTemplate& tmpl, ChatProvider& provider,
                          const RetryPolicy& retry, Clock& clock, RateLimiter& limiter) {
    LLMJudgement j;
    j.record_id = record.id;
    j.model_id = provider.model_id();

    std::string prompt;
    try {
        prompt = render_prompt(tmpl, record.model_text());
    } catch (const InputError& e) {
        j.bit = 0;
        j.parse_status = ParseStatus::defaulted_on_error;
        j.error = e.what();
        return j;
    }
    j.prompt_hash = prompt_hash(prompt);

    Duration backoff = retry.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, retry.max_attempts); ++attempt) {
        j.attempts = attempt;
        limiter.wait();
        try {
            j.raw_response = provider.complete(ChatRequest{.user = prompt});
            const ParsedResponse parsed = parse_response(j.raw_response);
            j.bit = parsed.bit;
            j.justification = parsed.justification;
            j.parse_status = parsed.status;
            j.error.clear();
            return j;
        } catch (const TransportError& e) {
            j.error = e.what();
            if (!e.retryable()) break;
        } catch (const Error& e) {
            j.error = e.what();
            break;
        }
        if (attempt < retry.max_attempts) {
            spdlog::debug("llm {}: attempt {} failed ({}); retrying in {} ms", record.id, attempt, j.error,
                          backoff.count());
            clock.sleep_for(backoff);
            backoff = Duration{static_cast<Duration::rep>(std::llround(backoff.count() * retry.multiplier))};
        }
    }
    spdlog::warn("llm {}: giving up after {} attempt(s): {}", record.id, j.attempts, j.error);
    j.bit = 0;
    j.parse_status = ParseStatus::defaulted_on_error;
    return j;
}

}  // namespace

std::vector<LLMJudgement> classify_batch(std::span<const RecordItem> records, const PromptTemplate& tmpl,
                                         ChatProvider& provider, const BatchConfig& config,
                                         const BatchProgress& progress) {
    tmpl.validate();
    SystemClock system_clock;
    Clock& clock = config.clock ? *config.clock : system_clock;
    RateLimiter limiter(clock, config.min_interval);

    std::vector<LLMJudgement> out(records.size());
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex progress_mutex;

    const auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            out[i] = classify_one(records[i], tmpl, provider, config.retry, clock, limiter);
            std::lock_guard lock(progress_mutex);
            ++done;
            if (progress) progress(done, records.size());
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(config.max_concurrency, 1, std::max<std::size_t>(1, records.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    const auto c = count(out);
    spdlog::info("llm batch: {} records, {} yes, {} defaulted, {} provider errors", c.total, c.yes, c.defaulted,
                 c.errors);
    return out;
}

JudgementCounts count(std::span<const LLMJudgement> judgements) {
    JudgementCounts c;
    for (const auto& j : judgements) {
        ++c.total;
        if (j.bit == 1) ++c.yes;
        switch (j.parse_status) {
            case ParseStatus::clean: ++c.clean; break;
            case ParseStatus::salvaged: ++c.salvaged; break;
            case ParseStatus::defaulted: ++c.defaulted; break;
            case ParseStatus::defaulted_on_error: ++c.errors; break;
        }
    }
    return c;
}

std::map<std::string, int> bits_of(std::span<const LLMJudgement> judgements) {
    std::map<std::string, int> bits;
    for (const auto& j : judgements) bits[j.record_id] = j.bit;
    return bits;
}

nlohmann::json judgements_to_json(std::span<const LLMJudgement> judgements) {
    nlohmann::json by_id = nlohmann::json::object();
    for (const auto& j : judgements) {
        nlohmann::json e{{"bit", j.bit},
                         {"justification", j.justification},
                         {"model_id", j.model_id},
                         {"prompt_hash", j.prompt_hash},
                         {"raw_response", j.raw_response},
                         {"parse_status", to_string(j.parse_status)},
                         {"attempts", j.attempts}};
        if (!j.error.empty()) e["error"] = j.error;
        by_id[j.record_id] = std::move(e);
    }
    return nlohmann::json{{"judgements", std::move(by_id)}};
}

std::vector<LLMJudgement> judgements_from_json(const nlohmann::json& root) {
    if (!root.is_object()) throw InputError("judgement file must be a JSON object");
    const nlohmann::json& by_id = root.contains("judgements") ? root.at("judgements") : root;
    if (!by_id.is_object()) throw InputError("judgements must be an object keyed by record id");
    std::vector<LLMJudgement> out;
    for (const auto& [id, v] : by_id.items()) {
        LLMJudgement j;
        j.record_id = id;
        if (v.is_number_integer()) {
            j.bit = v.get<int>();
            j.parse_status = ParseStatus::clean;
        } else if (v.is_object() && v.contains("bit") && v.at("bit").is_number_integer()) {
            j.bit = v.at("bit").get<int>();
            j.justification = v.value("justification", "");
            j.model_id = v.value("model_id", "");
            j.prompt_hash = v.value("prompt_hash", "");
            j.raw_response = v.value("raw_response", "");
            j.error = v.value("error", "");
            j.attempts = v.value("attempts", 0);
            const std::string st = v.value("parse_status", "clean");
            auto parsed = parse_status_from(st);
            if (!parsed) throw InputError(fmt::format("judgement '{}': unknown parse_status '{}'", id, st));
            j.parse_status = *parsed;
        } else {
            throw InputError(fmt::format("judgement '{}': expected 0, 1 or an object with \"bit\"", id));
        }
        if (j.bit != 0 && j.bit != 1) throw InputError(fmt::format("judgement '{}': bit must be 0 or 1", id));
        out.push_back(std::move(j));
    }
    return out;
}

void save_judgements(std::span<const LLMJudgement> judgements, const std::filesystem::path& path) {
    write_file(path, judgements_to_json(judgements).dump(2) + "\n");
}

std::vector<LLMJudgement> load_judgements(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(fmt::format("{}: not valid JSON: {}", path.string(), e.what()));
    }
    return judgements_from_json(j);
}

}  // namespace hscan::llm

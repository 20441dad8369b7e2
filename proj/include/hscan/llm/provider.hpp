#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/scanar/transport.hpp"

namespace hscan::llm {

struct ChatRequest {
    std::string system;  ///< omitted from the wire when empty
    std::string user;
};

/// Chat-completion endpoint. Implementations must be safe to call from
/// several threads at once.
class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string model_id() const = 0;
    /// Returns the assistant text. Throws TransportError or ConfigError.
    virtual std::string complete(const ChatRequest& request) = 0;
};

struct ChatConfig {
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o-mini-2024-07-18";
    std::string api_key;
    int max_tokens = 512;

    /// HSCAN_LLM_URL, HSCAN_LLM_MODEL, HSCAN_LLM_API_KEY (or OPENAI_API_KEY),
    /// HSCAN_LLM_MAX_TOKENS.
    static ChatConfig from_env();
};

/// OpenAI-style /chat/completions over any Transport, temperature 0.
class OpenAICompatibleProvider final : public ChatProvider {
public:
    OpenAICompatibleProvider(ChatConfig config, std::shared_ptr<Transport> transport);

    std::string model_id() const override { return config_.model; }
    std::string complete(const ChatRequest& request) override;

private:
    ChatConfig config_;
    std::shared_ptr<Transport> transport_;
};

/// Offline provider driven by a rules file:
///
///     # comment
///     YES screening
///     NO  veterinary
///     DEFAULT NO
///
/// The first rule whose phrase occurs (case-insensitively) in the article
/// text decides; the reply is "YES. Matched rule: <phrase>" or similar.
class StubProvider final : public ChatProvider {
public:
    struct Rule {
        bool yes = true;
        std::string phrase;  ///< lowercase
    };

    explicit StubProvider(std::vector<Rule> rules, bool default_yes = false, std::string model = "stub");
    static StubProvider parse(std::string_view rules_text, std::string model = "stub");
    static StubProvider from_file(const std::string& path);

    std::string model_id() const override { return model_; }
    std::string complete(const ChatRequest& request) override;

    /// The decision the stub would make for a bare article text.
    bool decide(std::string_view article) const;

private:
    std::vector<Rule> rules_;
    bool default_yes_;
    std::string model_;
};

}  // namespace hscan::llm

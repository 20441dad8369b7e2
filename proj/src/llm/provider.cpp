#include "hscan/llm/provider.hpp"

#include <cstdlib>
#include <sstream>

#include <fmt/format.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/project_io.hpp"
#include "hscan/core/utf8.hpp"
#include "hscan/llm/prompt.hpp"
#include "json.hpp"

namespace hscan::llm {

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

}  // namespace

ChatConfig ChatConfig::from_env() {
    ChatConfig c;
    if (auto v = env("HSCAN_LLM_URL")) c.url = *v;
    if (auto v = env("HSCAN_LLM_MODEL")) c.model = *v;
    if (auto v = env("HSCAN_LLM_API_KEY")) c.api_key = *v;
    else if (auto k = env("OPENAI_API_KEY")) c.api_key = *k;
    if (auto v = env("HSCAN_LLM_MAX_TOKENS")) {
        try {
            c.max_tokens = std::stoi(*v);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("HSCAN_LLM_MAX_TOKENS is not an integer: '{}'", *v));
        }
    }
    return c;
}

OpenAICompatibleProvider::OpenAICompatibleProvider(ChatConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.url.empty()) throw ConfigError("llm provider url is empty");
    if (config_.model.empty()) throw ConfigError("llm model id is empty");
    if (config_.max_tokens < 1) throw ConfigError("llm max_tokens must be >= 1");
    if (!transport_) throw ConfigError("llm provider needs a transport");
}

std::string OpenAICompatibleProvider::complete(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    const nlohmann::json body{{"model", config_.model},
                              {"temperature", 0},
                              {"max_tokens", config_.max_tokens},
                              {"messages", messages}};
    HttpRequest req{.method = "POST", .url = config_.url, .body = body.dump(), .content_type = "application/json"};
    if (!config_.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + config_.api_key);

    const HttpResponse resp = transport_->send(req);
    if (resp.status == 401 || resp.status == 403) {
        throw ConfigError(fmt::format("llm provider rejected credentials (HTTP {})", resp.status));
    }
    if (resp.status == 429 || resp.status >= 500) {
        throw TransportError(fmt::format("llm provider returned HTTP {}", resp.status), true);
    }
    if (resp.status < 200 || resp.status >= 300) {
        throw TransportError(fmt::format("llm provider returned HTTP {}: {}", resp.status,
                                         utf8::truncate(resp.body, 200)),
                             false);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(resp.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(fmt::format("llm provider sent an unexpected body: {}", e.what()), false);
    }
}

StubProvider::StubProvider(std::vector<Rule> rules, bool default_yes, std::string model)
    : rules_(std::move(rules)), default_yes_(default_yes), model_(std::move(model)) {
    for (auto& r : rules_) r.phrase = utf8::ascii_lower(r.phrase);
}

StubProvider StubProvider::parse(std::string_view rules_text, std::string model) {
    std::vector<Rule> rules;
    bool default_yes = false;
    std::istringstream in{std::string(rules_text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view t = utf8::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto sp = t.find_first_of(" \t");
        const std::string verb = utf8::ascii_lower(t.substr(0, sp));
        const std::string_view rest = sp == std::string_view::npos ? std::string_view{} : utf8::trim(t.substr(sp));
        if (verb == "default") {
            const std::string v = utf8::ascii_lower(rest);
            if (v != "yes" && v != "no") throw InputError(fmt::format("stub rules line {}: DEFAULT needs YES or NO", lineno));
            default_yes = v == "yes";
        } else if (verb == "yes" || verb == "no") {
            if (rest.empty()) throw InputError(fmt::format("stub rules line {}: missing phrase", lineno));
            rules.push_back({verb == "yes", std::string(rest)});
        } else {
            throw InputError(fmt::format("stub rules line {}: expected YES, NO or DEFAULT", lineno));
        }
    }
    return StubProvider(std::move(rules), default_yes, std::move(model));
}

StubProvider StubProvider::from_file(const std::string& path) { return parse(read_file(path)); }

bool StubProvider::decide(std::string_view article) const {
    const std::string text = utf8::ascii_lower(article);
    for (const auto& r : rules_) {
        if (text.find(r.phrase) != std::string::npos) return r.yes;
    }
    return default_yes_;
}

std::string StubProvider::complete(const ChatRequest& request) {
    std::string_view article = request.user;
    if (auto pos = article.rfind(kArticlePrefix); pos != std::string_view::npos) {
        article.remove_prefix(pos + kArticlePrefix.size());
    }
    const std::string text = utf8::ascii_lower(article);
    for (const auto& r : rules_) {
        if (text.find(r.phrase) != std::string::npos) {
            return fmt::format("{}. Matched rule: {}", r.yes ? "YES" : "NO", r.phrase);
        }
    }
    return default_yes_ ? "YES. No rule matched." : "NO. No rule matched.";
}

}  // namespace hscan::llm

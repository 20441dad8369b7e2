#include <cstdlib>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "hscan/core/utf8.hpp"
#include "hscan/embedding/embedding.hpp"

namespace hscan::embedding {

using nlohmann::json;

ExternalConfig ExternalConfig::from_env() {
    ExternalConfig c;
    const auto get = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v == nullptr ? std::string() : std::string(v);
    };
    c.endpoint = get("HSCAN_EMBED_URL");
    c.model = get("HSCAN_EMBED_MODEL");
    c.auth_token = get("HSCAN_EMBED_TOKEN");
    if (auto b = get("HSCAN_EMBED_BATCH"); !b.empty()) c.batch_size = std::stoul(b);
    if (auto m = get("HSCAN_EMBED_MAX_CHARS"); !m.empty()) c.max_chars = std::stoul(m);
    return c;
}

ExternalBackend::ExternalBackend(ExternalConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.endpoint.empty()) throw BackendConfigError("external embedder: no endpoint configured");
    if (config_.batch_size == 0) throw BackendConfigError("external embedder: batch size must be positive");
    if (!transport_) throw BackendConfigError("external embedder: no transport");
}

std::size_t ExternalBackend::dimension() {
    {
        std::lock_guard lock(mutex_);
        if (dimension_) return *dimension_;
    }
    const std::string probe[] = {"dimension probe"};
    encode(probe);
    std::lock_guard lock(mutex_);
    return *dimension_;
}

std::vector<Vector> ExternalBackend::encode_batch(std::span<const std::string> texts) {
    json inputs = json::array();
    for (const auto& t : texts) {
        const auto cut = utf8::truncate(t, config_.max_chars);
        if (cut.size() < t.size()) {
            ++truncated_;
            spdlog::debug("external embedder: input truncated to {} characters", config_.max_chars);
        }
        inputs.push_back(std::string(cut));
    }
    HttpRequest req;
    req.method = "POST";
    req.url = config_.endpoint;
    req.content_type = "application/json";
    req.body = json{{"model", config_.model}, {"inputs", inputs}}.dump();
    if (!config_.auth_token.empty()) req.headers.emplace_back("Authorization", "Bearer " + config_.auth_token);

    const HttpResponse resp = transport_->send(req);
    if (resp.status == 401 || resp.status == 403) {
        throw BackendConfigError(fmt::format("external embedder: authentication rejected (HTTP {})", resp.status));
    }
    if (resp.status < 200 || resp.status >= 300) {
        throw TransportError(fmt::format("external embedder: HTTP {}", resp.status), resp.status >= 500);
    }
    std::vector<Vector> out;
    try {
        const json body = json::parse(resp.body);
        for (const auto& row : body.at("embeddings")) out.push_back(row.get<Vector>());
    } catch (const json::exception& e) {
        throw TransportError(fmt::format("external embedder: malformed response: {}", e.what()), false);
    }
    if (out.size() != texts.size()) {
        throw TransportError(fmt::format("external embedder: {} vectors for {} inputs", out.size(), texts.size()), false);
    }
    for (const auto& v : out) {
        if (v.empty()) throw TransportError("external embedder: empty vector", false);
        if (!dimension_) dimension_ = v.size();
        if (v.size() != *dimension_) {
            throw TransportError(fmt::format("external embedder: dimension changed {} -> {}", *dimension_, v.size()),
                                 false);
        }
    }
    return out;
}

std::vector<Vector> ExternalBackend::encode(std::span<const std::string> texts) {
    std::lock_guard lock(mutex_);
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const std::size_t n = std::min(config_.batch_size, texts.size() - start);
        auto batch = encode_batch(texts.subspan(start, n));
        for (auto& v : batch) out.push_back(std::move(v));
    }
    return out;
}

}  // namespace hscan::embedding

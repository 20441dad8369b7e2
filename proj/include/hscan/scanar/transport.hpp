#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "hscan/scanar/clock.hpp"

namespace hscan {

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::string content_type;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
    std::string final_url;  ///< after redirects; equals the request URL when none
};

/// Synchronous HTTP. Connection-level failures raise TransportError; HTTP
/// error statuses are returned, not thrown.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;

    HttpResponse get(const std::string& url) { return send(HttpRequest{.url = url}); }
};

/// Canned responses keyed by exact URL; unknown URLs get 404. Every request
/// is logged with the clock reading at the time it was issued.
class FixtureTransport final : public Transport {
public:
    explicit FixtureTransport(Clock* clock = nullptr) : clock_(clock) {}

    void add(std::string url, HttpResponse response);
    /// Simulates a dead host: the URL raises a TransportError.
    void add_failure(std::string url, bool retryable = true);

    HttpResponse send(const HttpRequest& request) override;

    struct Call {
        std::string url;
        Duration at;
    };
    std::vector<Call> calls() const;
    std::size_t call_count(const std::string& url) const;

private:
    Clock* clock_;
    mutable std::mutex mutex_;
    std::map<std::string, HttpResponse> routes_;
    std::map<std::string, bool> failures_;
    std::vector<Call> calls_;
};

/// Adapts a callable; handy for provider and embedder stubs.
class FunctionTransport final : public Transport {
public:
    using Handler = std::function<HttpResponse(const HttpRequest&)>;
    explicit FunctionTransport(Handler h) : handler_(std::move(h)) {}
    HttpResponse send(const HttpRequest& request) override { return handler_(request); }

private:
    Handler handler_;
};

struct HttpOptions {
    std::chrono::seconds connect_timeout{10};
    std::chrono::seconds read_timeout{60};
    bool follow_redirects = true;
    std::string user_agent = "hscan/1.0";
};

/// Live network adapter (HTTP and HTTPS).
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(HttpOptions options = {}) : options_(std::move(options)) {}
    HttpResponse send(const HttpRequest& request) override;

private:
    HttpOptions options_;
};

/// Percent-encodes everything outside the RFC-3986 unreserved set.
std::string url_encode(std::string_view s);
std::string url_decode(std::string_view s);

}  // namespace hscan

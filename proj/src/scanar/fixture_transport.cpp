#include <fmt/format.h>

#include "hscan/core/errors.hpp"
#include "hscan/scanar/transport.hpp"

namespace hscan {

void FixtureTransport::add(std::string url, HttpResponse response) {
    std::lock_guard lock(mutex_);
    if (response.final_url.empty()) response.final_url = url;
    routes_[std::move(url)] = std::move(response);
}

void FixtureTransport::add_failure(std::string url, bool retryable) {
    std::lock_guard lock(mutex_);
    failures_[std::move(url)] = retryable;
}

HttpResponse FixtureTransport::send(const HttpRequest& request) {
    std::lock_guard lock(mutex_);
    calls_.push_back({request.url, clock_ ? clock_->now() : Duration{0}});
    if (auto f = failures_.find(request.url); f != failures_.end()) {
        throw TransportError(fmt::format("fixture: connection refused for {}", request.url), f->second);
    }
    if (auto it = routes_.find(request.url); it != routes_.end()) return it->second;
    return HttpResponse{.status = 404, .body = "not found", .content_type = "text/plain", .final_url = request.url};
}

std::vector<FixtureTransport::Call> FixtureTransport::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t FixtureTransport::call_count(const std::string& url) const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& c : calls_) n += c.url == url ? 1 : 0;
    return n;
}

std::string url_encode(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                                c == '-' || c == '_' || c == '.' || c == '~';
        if (unreserved) out.push_back(static_cast<char>(c));
        else out += fmt::format("%{:02X}", c);
    }
    return out;
}

std::string url_decode(std::string_view s) {
    const auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const int hi = hex(s[i + 1]);
            const int lo = hex(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(s[i] == '+' ? ' ' : s[i]);
    }
    return out;
}

}  // namespace hscan

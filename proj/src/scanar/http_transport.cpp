#include "httplib.h"

#include <fmt/format.h>

#include "hscan/core/errors.hpp"
#include "hscan/scanar/transport.hpp"

namespace hscan {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError(fmt::format("invalid URL '{}'", url), false);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse HttpTransport::send(const HttpRequest& request) {
    const SplitUrl parts = split_url(request.url);
    httplib::Client client(parts.origin);
    if (!client.is_valid()) throw TransportError(fmt::format("unsupported URL '{}'", request.url), false);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    client.set_follow_location(options_.follow_redirects);

    httplib::Headers headers{{"User-Agent", options_.user_agent}};
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    httplib::Result result;
    if (request.method == "GET") {
        result = client.Get(parts.target, headers);
    } else if (request.method == "POST") {
        result = client.Post(parts.target, headers, request.body,
                             request.content_type.empty() ? "application/json" : request.content_type);
    } else {
        throw TransportError(fmt::format("unsupported method {}", request.method), false);
    }
    if (!result) {
        throw TransportError(fmt::format("{} {}: {}", request.method, request.url, httplib::to_string(result.error())));
    }
    HttpResponse response;
    response.status = result->status;
    response.body = std::move(result->body);
    response.content_type = result->get_header_value("Content-Type");
    response.final_url = result->location.empty() ? request.url : result->location;
    return response;
}

}  // namespace hscan

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/core/errors.hpp"

namespace hscan::rss {

struct FeedItem {
    std::string title;
    std::string link;
    std::string outlet;
    std::optional<std::chrono::year_month_day> published;
};

struct Feed {
    std::vector<FeedItem> items;
    /// `<opensearch:totalResults>` when the feed carries one.
    std::optional<long long> total_results;
};

/// Raised for payloads that are not an RSS 2.0 document. Keeps the raw bytes.
class FeedParseError : public Error {
public:
    FeedParseError(const std::string& what, std::string payload) : Error(what), payload_(std::move(payload)) {}
    const std::string& payload() const noexcept { return payload_; }

private:
    std::string payload_;
};

Feed parse(std::string_view xml);

/// Decodes the five XML entities plus numeric character references.
std::string decode_entities(std::string_view s);

/// RFC-822 date as used in `<pubDate>`, e.g. "Mon, 01 Jan 2024 10:00:00 GMT".
std::optional<std::chrono::year_month_day> parse_pub_date(std::string_view s);

}  // namespace hscan::rss

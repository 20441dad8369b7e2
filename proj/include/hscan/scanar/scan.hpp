#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hscan/core/errors.hpp"
#include "hscan/core/ris.hpp"
#include "hscan/scanar/clock.hpp"
#include "hscan/scanar/rss.hpp"
#include "hscan/scanar/transport.hpp"

namespace hscan::scanar {

using Date = std::chrono::year_month_day;

struct Timeframe {
    std::optional<Date> start;
    std::optional<Date> end;
};

struct ScanParams {
    std::optional<Timeframe> timeframe;
    int max_per_query = 100;
    bool scrape_fulltext = false;
    Duration inter_query_delay = std::chrono::milliseconds{3000};
    Duration inter_resolve_delay = std::chrono::milliseconds{1500};
    std::size_t fulltext_truncate = 30000;
    int max_attempts = 3;
    std::size_t min_body_chars = 200;  ///< below this a scrape warning is recorded

    /// Throws InputError when out of range.
    void validate() const;
};

/// Live endpoint settings. Defaults target the public news-search RSS feed;
/// `from_env` lets HSCAN_RSS_BASE_URL, HSCAN_RSS_HL, HSCAN_RSS_GL,
/// HSCAN_RSS_CEID and HSCAN_RSS_DECODE override them.
struct FeedConfig {
    std::string base_url = "https://news.google.com/rss/search";
    std::string hl = "en-GB";
    std::string gl = "GB";
    std::string ceid = "GB:en";
    bool decode_redirects = true;

    static FeedConfig from_env();
};

/// Timeframe is encoded into the query as `after:YYYY-MM-DD before:YYYY-MM-DD`.
std::string build_feed_url(const FeedConfig& config, std::string_view query, const std::optional<Timeframe>& timeframe);

struct NewsArticle {
    std::string dedup_key;
    std::string title;
    std::string feed_url;
    std::optional<std::string> resolved_url;
    std::string outlet;
    std::optional<Date> published;
    std::vector<std::string> queries;
    int dup_count = 1;
    int min_page_rank = 1;
    std::size_t first_seen_position = 0;
    std::optional<std::string> full_text;
};

struct SearchDocEntry {
    std::string query;
    long long n_results_reported = 0;
    std::size_t n_retrieved = 0;
    std::size_t n_new_unique = 0;
};

struct RawItem {
    std::string title;
    std::string feed_url;
    std::string outlet;
    std::optional<Date> published;
    int position = 0;  ///< 1-based rank within the query's feed
};

struct FetchResult {
    std::vector<RawItem> items;
    long long n_results_reported = 0;
    bool total_reported = false;  ///< false when the feed carried no total
};

/// A query whose retrieval failed after all attempts.
class FetchError : public TransportError {
public:
    FetchError(std::string query, const std::string& what, bool retryable)
        : TransportError(what, retryable), query_(std::move(query)) {}
    const std::string& query() const noexcept { return query_; }

private:
    std::string query_;
};

/// One query per non-blank line, trimmed, order and duplicates preserved.
std::vector<std::string> parse_query_file(std::string_view bytes);

/// Virtual result page for a 1-based position: ceil(position / 10).
int page_of(int position);

/// Fetches one query's feed. Transport faults and 429/5xx responses are
/// retried with exponential backoff starting at the inter-query delay.
/// Malformed XML raises rss::FeedParseError immediately.
FetchResult fetch_query(std::string_view query, const ScanParams& params, const FeedConfig& config, Clock& clock,
                        Transport& transport);

/// De-duplicating article store keyed by title ⧺ feed URL, in first-seen order.
class ArticleStore {
public:
    /// Returns true when the item created a new article.
    bool merge(const RawItem& item, std::string_view query);

    std::vector<NewsArticle>& articles() { return articles_; }
    const std::vector<NewsArticle>& articles() const { return articles_; }
    const NewsArticle* find(std::string_view key) const;
    std::size_t size() const { return articles_.size(); }

    static std::string key_of(std::string_view title, std::string_view url);

private:
    std::vector<NewsArticle> articles_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t events_ = 0;
};

/// Resolves the feed URL and scrapes readable text. Never throws for
/// per-article problems; those become entries in `warnings`.
void resolve_and_scrape(NewsArticle& article, const ScanParams& params, const FeedConfig& config,
                        IntervalGate& resolve_gate, Transport& transport, std::vector<std::string>& warnings);

/// Stable: ascending min page rank, then descending duplicate count, then
/// ascending first-seen position.
void self_supervised_rank(std::vector<NewsArticle>& articles);

struct ScanResult {
    std::vector<NewsArticle> articles;  ///< ranked
    std::vector<SearchDocEntry> search_doc;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;  ///< failed queries
    std::vector<Duration> fetch_starts;
    std::vector<Duration> resolve_starts;
};

struct ScanProgress {
    std::size_t queries_done = 0;
    std::size_t queries_total = 0;
    std::size_t articles_scraped = 0;
    std::string phase;
};

using ProgressFn = std::function<void(const ScanProgress&)>;

/// The whole retrieval pipeline. Fails only when every query fails.
ScanResult run_scan(std::span<const std::string> queries, const ScanParams& params, const FeedConfig& config,
                    Clock& clock, Transport& transport, const ProgressFn& progress = {});

std::string export_search_doc(std::span<const SearchDocEntry> doc);
std::string export_articles_csv(std::span<const NewsArticle> articles);
std::string export_articles_ris(std::span<const NewsArticle> articles);
ris::Entry to_ris(const NewsArticle& article);

std::string format_date(const Date& d);  // YYYY-MM-DD
std::optional<Date> parse_date(std::string_view s);

/// Loads a fixture transport from `dir/routes.json`:
///   [{"query": "...", "file": "feed.xml"} | {"url": "...", "file": "page.html",
///     "status": 200, "content_type": "text/html", "final_url": "..."} |
///    {"url": "...", "fail": true}]
/// Query routes are keyed by the feed URL built from `config` and `timeframe`.
void load_fixture_routes(FixtureTransport& transport, const std::filesystem::path& dir, const FeedConfig& config,
                         const std::optional<Timeframe>& timeframe);

}  // namespace hscan::scanar

#include "hscan/scanar/scan.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "hscan/core/csv.hpp"
#include "hscan/core/project_io.hpp"
#include "hscan/core/utf8.hpp"
#include "hscan/scanar/html_text.hpp"

namespace hscan::scanar {

void ScanParams::validate() const {
    if (max_per_query < 1 || max_per_query > 100) {
        throw InputError(fmt::format("max_per_query must be in [1, 100], got {}", max_per_query));
    }
    if (inter_query_delay < Duration::zero() || inter_resolve_delay < Duration::zero()) {
        throw InputError("delays must be non-negative");
    }
    if (max_attempts < 1) throw InputError("max_attempts must be at least 1");
    if (timeframe && timeframe->start && timeframe->end &&
        std::chrono::sys_days{*timeframe->start} > std::chrono::sys_days{*timeframe->end}) {
        throw InputError("timeframe start is after its end");
    }
}

FeedConfig FeedConfig::from_env() {
    FeedConfig c;
    const auto env = [](const char* name, std::string& target) {
        if (const char* v = std::getenv(name); v != nullptr && *v != '\0') target = v;
    };
    env("HSCAN_RSS_BASE_URL", c.base_url);
    env("HSCAN_RSS_HL", c.hl);
    env("HSCAN_RSS_GL", c.gl);
    env("HSCAN_RSS_CEID", c.ceid);
    if (const char* v = std::getenv("HSCAN_RSS_DECODE"); v != nullptr) {
        c.decode_redirects = std::string_view(v) != "0" && std::string_view(v) != "false";
    }
    return c;
}

std::string format_date(const Date& d) {
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                       static_cast<unsigned>(d.day()));
}

std::optional<Date> parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    const std::string tmp(s);
    char tail = 0;
    if (std::sscanf(tmp.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string build_feed_url(const FeedConfig& config, std::string_view query, const std::optional<Timeframe>& tf) {
    std::string q(query);
    if (tf && tf->start) q += " after:" + format_date(*tf->start);
    if (tf && tf->end) q += " before:" + format_date(*tf->end);
    std::string url = config.base_url;
    url += url.find('?') == std::string::npos ? '?' : '&';
    url += "q=" + url_encode(q);
    if (!config.hl.empty()) url += "&hl=" + url_encode(config.hl);
    if (!config.gl.empty()) url += "&gl=" + url_encode(config.gl);
    if (!config.ceid.empty()) url += "&ceid=" + url_encode(config.ceid);
    return url;
}

std::vector<std::string> parse_query_file(std::string_view bytes) {
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
    std::vector<std::string> queries;
    std::size_t start = 0;
    while (start <= bytes.size()) {
        std::size_t nl = bytes.find('\n', start);
        if (nl == std::string_view::npos) nl = bytes.size();
        const auto line = utf8::trim(bytes.substr(start, nl - start));
        if (!line.empty()) queries.emplace_back(line);
        start = nl + 1;
    }
    if (queries.empty()) throw InputError("no queries");
    return queries;
}

int page_of(int position) {
    if (position < 1) throw InputError(fmt::format("result position must be >= 1, got {}", position));
    return (position + 9) / 10;
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

FetchResult fetch_query(std::string_view query, const ScanParams& params, const FeedConfig& config, Clock& clock,
                        Transport& transport) {
    const std::string url = build_feed_url(config, query, params.timeframe);
    Duration backoff = params.inter_query_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= params.max_attempts; ++attempt) {
        if (attempt > 1) {
            clock.sleep_for(backoff);
            backoff *= 2;
        }
        HttpResponse response;
        try {
            response = transport.get(url);
        } catch (const TransportError& e) {
            last_error = e.what();
            if (!e.retryable()) throw FetchError(std::string(query), last_error, false);
            spdlog::warn("query '{}': attempt {} failed: {}", query, attempt, last_error);
            continue;
        }
        if (retryable_status(response.status)) {
            last_error = fmt::format("HTTP {} from feed endpoint", response.status);
            spdlog::warn("query '{}': attempt {} got {}", query, attempt, response.status);
            continue;
        }
        if (response.status < 200 || response.status >= 300) {
            throw FetchError(std::string(query), fmt::format("HTTP {} from feed endpoint", response.status), false);
        }
        const rss::Feed feed = rss::parse(response.body);
        FetchResult result;
        const std::size_t n = std::min(feed.items.size(), static_cast<std::size_t>(params.max_per_query));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& it = feed.items[i];
            result.items.push_back(RawItem{
                .title = it.title,
                .feed_url = it.link,
                .outlet = it.outlet,
                .published = it.published,
                .position = static_cast<int>(i + 1),
            });
        }
        result.total_reported = feed.total_results.has_value();
        result.n_results_reported =
            feed.total_results ? *feed.total_results : static_cast<long long>(result.items.size());
        return result;
    }
    throw FetchError(std::string(query),
                     fmt::format("query '{}' failed after {} attempts: {}", query, params.max_attempts, last_error),
                     true);
}

std::string ArticleStore::key_of(std::string_view title, std::string_view url) {
    std::string key(title);
    key += url;
    return key;
}

bool ArticleStore::merge(const RawItem& item, std::string_view query) {
    ++events_;
    std::string key = key_of(item.title, item.feed_url);
    const int page = page_of(item.position);
    if (auto it = index_.find(key); it != index_.end()) {
        NewsArticle& a = articles_[it->second];
        a.dup_count += 1;
        a.queries.emplace_back(query);
        a.min_page_rank = std::min(a.min_page_rank, page);
        return false;
    }
    NewsArticle a;
    a.dedup_key = key;
    a.title = item.title;
    a.feed_url = item.feed_url;
    a.outlet = item.outlet;
    a.published = item.published;
    a.queries.emplace_back(query);
    a.dup_count = 1;
    a.min_page_rank = page;
    a.first_seen_position = events_;
    index_.emplace(std::move(key), articles_.size());
    articles_.push_back(std::move(a));
    return true;
}

const NewsArticle* ArticleStore::find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    return it == index_.end() ? nullptr : &articles_[it->second];
}

void resolve_and_scrape(NewsArticle& article, const ScanParams& params, const FeedConfig& config,
                        IntervalGate& resolve_gate, Transport& transport, std::vector<std::string>& warnings) {
    resolve_gate.wait();
    HttpResponse response;
    try {
        response = transport.get(article.feed_url);
    } catch (const TransportError& e) {
        warnings.push_back(fmt::format("unresolvable URL {}: {}", article.feed_url, e.what()));
        return;
    }
    if (response.status < 200 || response.status >= 300) {
        warnings.push_back(fmt::format("unresolvable URL {}: HTTP {}", article.feed_url, response.status));
        return;
    }
    if (config.decode_redirects && !response.final_url.empty()) article.resolved_url = response.final_url;
    if (!html::looks_like_html(response.content_type, response.body)) {
        warnings.push_back(fmt::format("non-HTML content at {} ({})", article.feed_url,
                                       response.content_type.empty() ? "unknown type" : response.content_type));
        return;
    }
    const std::string text = html::extract_text(response.body);
    article.full_text = std::string(utf8::truncate(text, params.fulltext_truncate));
    if (utf8::length(*article.full_text) < params.min_body_chars) {
        warnings.push_back(fmt::format("short body text ({} chars) at {}", utf8::length(*article.full_text),
                                       article.feed_url));
    }
}

void self_supervised_rank(std::vector<NewsArticle>& articles) {
    std::stable_sort(articles.begin(), articles.end(), [](const NewsArticle& a, const NewsArticle& b) {
        if (a.min_page_rank != b.min_page_rank) return a.min_page_rank < b.min_page_rank;
        if (a.dup_count != b.dup_count) return a.dup_count > b.dup_count;
        return a.first_seen_position < b.first_seen_position;
    });
}

ScanResult run_scan(std::span<const std::string> queries, const ScanParams& params, const FeedConfig& config,
                    Clock& clock, Transport& transport, const ProgressFn& progress) {
    params.validate();
    if (queries.empty()) throw InputError("no queries");

    ScanResult result;
    ArticleStore store;
    IntervalGate query_gate(clock, params.inter_query_delay);
    ScanProgress prog{.queries_total = queries.size(), .phase = "retrieving"};
    if (progress) progress(prog);

    std::size_t failures = 0;
    for (const auto& query : queries) {
        query_gate.wait();
        SearchDocEntry entry{.query = query};
        try {
            const FetchResult fetched = fetch_query(query, params, config, clock, transport);
            entry.n_results_reported = fetched.n_results_reported;
            entry.n_retrieved = fetched.items.size();
            if (!fetched.total_reported) {
                spdlog::debug("query '{}': feed reported no total; using retrieved count", query);
            }
            for (const auto& item : fetched.items) {
                if (store.merge(item, query)) ++entry.n_new_unique;
            }
        } catch (const FetchError& e) {
            ++failures;
            result.errors.push_back(e.what());
            spdlog::error("{}", e.what());
        } catch (const rss::FeedParseError& e) {
            ++failures;
            result.errors.push_back(fmt::format("query '{}': {} ({} bytes of payload)", query, e.what(),
                                                e.payload().size()));
            spdlog::error("query '{}': malformed feed: {}", query, e.what());
        }
        result.search_doc.push_back(std::move(entry));
        ++prog.queries_done;
        if (progress) progress(prog);
    }
    if (failures == queries.size()) {
        std::string msg = "scan failed: every query failed";
        for (const auto& e : result.errors) msg += "\n  " + e;
        throw Error(msg);
    }

    if (params.scrape_fulltext) {
        prog.phase = "scraping";
        IntervalGate resolve_gate(clock, params.inter_resolve_delay);
        for (auto& article : store.articles()) {
            resolve_and_scrape(article, params, config, resolve_gate, transport, result.warnings);
            ++prog.articles_scraped;
            if (progress) progress(prog);
        }
        result.resolve_starts = resolve_gate.starts();
    }
    result.fetch_starts = query_gate.starts();
    result.articles = std::move(store.articles());
    self_supervised_rank(result.articles);
    prog.phase = "done";
    if (progress) progress(prog);
    return result;
}

std::string export_search_doc(std::span<const SearchDocEntry> doc) {
    std::string out;
    csv::write_row(out, {"query", "n_results_reported", "n_retrieved", "n_new_unique"});
    for (const auto& e : doc) {
        csv::write_row(out, {e.query, std::to_string(e.n_results_reported), std::to_string(e.n_retrieved),
                             std::to_string(e.n_new_unique)});
    }
    return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string export_articles_csv(std::span<const NewsArticle> articles) {
    std::string out;
    csv::write_row(out, {"rank", "title", "outlet", "published", "feed_url", "resolved_url", "min_page_rank",
                         "dup_count", "queries", "first_seen_position", "full_text"});
    std::size_t rank = 0;
    for (const auto& a : articles) {
        csv::write_row(out, {std::to_string(++rank), a.title, a.outlet, a.published ? format_date(*a.published) : "",
                             a.feed_url, a.resolved_url.value_or(""), std::to_string(a.min_page_rank),
                             std::to_string(a.dup_count), join(a.queries, "; "),
                             std::to_string(a.first_seen_position), a.full_text.value_or("")});
    }
    return out;
}

ris::Entry to_ris(const NewsArticle& a) {
    ris::Entry e;
    e.type = "NEWS";
    e.title = a.title;
    e.url = a.resolved_url.value_or(a.feed_url);
    e.date = a.published;
    e.journal = a.outlet;
    if (a.full_text) e.abstract = *a.full_text;
    e.notes.push_back("Queries: " + join(a.queries, "; "));
    e.notes.push_back(fmt::format("Duplicate count: {}", a.dup_count));
    return e;
}

std::string export_articles_ris(std::span<const NewsArticle> articles) {
    std::vector<ris::Entry> entries;
    entries.reserve(articles.size());
    for (const auto& a : articles) entries.push_back(to_ris(a));
    return ris::write(entries);
}

void load_fixture_routes(FixtureTransport& transport, const std::filesystem::path& dir, const FeedConfig& config,
                         const std::optional<Timeframe>& timeframe) {
    const auto routes_path = dir / "routes.json";
    nlohmann::json routes;
    try {
        routes = nlohmann::json::parse(read_file(routes_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("{}: {}", routes_path.string(), e.what()));
    }
    if (!routes.is_array()) throw InputError(fmt::format("{}: expected a JSON array", routes_path.string()));
    for (const auto& r : routes) {
        std::string url;
        if (r.contains("query")) url = build_feed_url(config, r["query"].get<std::string>(), timeframe);
        else url = r.at("url").get<std::string>();
        if (r.value("fail", false)) {
            transport.add_failure(url);
            continue;
        }
        HttpResponse resp;
        resp.status = r.value("status", 200);
        resp.body = r.contains("file") ? read_file(dir / r["file"].get<std::string>()) : r.value("body", "");
        resp.content_type = r.value("content_type", r.contains("query") ? "application/rss+xml" : "text/html");
        resp.final_url = r.value("final_url", url);
        transport.add(url, std::move(resp));
    }
}

}  // namespace hscan::scanar

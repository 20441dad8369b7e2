#include "hscan/scanar/rss.hpp"

#include <array>
#include <cstdlib>

#include <fmt/format.h>

#include "hscan/core/utf8.hpp"

namespace hscan::rss {

namespace {

// Finds `<name` followed by '>' , whitespace or '/'. Returns npos when absent.
std::size_t find_open_tag(std::string_view xml, std::string_view name, std::size_t from) {
    while (true) {
        const std::size_t pos = xml.find('<', from);
        if (pos == std::string_view::npos) return pos;
        if (xml.substr(pos + 1, name.size()) == name) {
            const std::size_t after = pos + 1 + name.size();
            if (after < xml.size()) {
                const char c = xml[after];
                if (c == '>' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '/') return pos;
            }
        }
        from = pos + 1;
    }
}

struct Element {
    std::string_view inner;
    std::size_t end;  // one past the closing tag
    bool found;
};

Element find_element(std::string_view xml, std::string_view name, std::size_t from, std::size_t limit) {
    const std::string_view scope = xml.substr(0, limit);
    const std::size_t open = find_open_tag(scope, name, from);
    if (open == std::string_view::npos) return {{}, 0, false};
    const std::size_t gt = scope.find('>', open);
    if (gt == std::string_view::npos) throw FeedParseError(fmt::format("unterminated <{}> tag", name), std::string(xml));
    if (scope[gt - 1] == '/') return {std::string_view{}, gt + 1, true};
    const std::string close = fmt::format("</{}>", name);
    const std::size_t close_pos = scope.find(close, gt + 1);
    if (close_pos == std::string_view::npos) {
        throw FeedParseError(fmt::format("missing </{}>", name), std::string(xml));
    }
    return {scope.substr(gt + 1, close_pos - gt - 1), close_pos + close.size(), true};
}

// Element text: CDATA sections verbatim, everything else entity-decoded.
std::string text_of(std::string_view inner) {
    std::string out;
    std::size_t i = 0;
    while (i < inner.size()) {
        const std::size_t cdata = inner.find("<![CDATA[", i);
        const std::string_view plain = inner.substr(i, cdata == std::string_view::npos ? std::string_view::npos : cdata - i);
        out += decode_entities(plain);
        if (cdata == std::string_view::npos) break;
        const std::size_t end = inner.find("]]>", cdata + 9);
        if (end == std::string_view::npos) {
            out += inner.substr(cdata + 9);
            break;
        }
        out += inner.substr(cdata + 9, end - cdata - 9);
        i = end + 3;
    }
    return std::string(utf8::trim(out));
}

}  // namespace

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        const std::size_t semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        const std::string_view ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else if (ent == "nbsp") utf8::append(out, 0xA0);
        else if (ent.size() > 1 && ent[0] == '#') {
            const bool hex = ent[1] == 'x' || ent[1] == 'X';
            const std::string digits(ent.substr(hex ? 2 : 1));
            char* end = nullptr;
            const unsigned long cp = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
            if (digits.empty() || *end != '\0' || cp > 0x10FFFF) {
                out.push_back('&');
                continue;
            }
            utf8::append(out, static_cast<char32_t>(cp));
        } else {
            out.push_back('&');
            continue;
        }
        i = semi;
    }
    return out;
}

std::optional<std::chrono::year_month_day> parse_pub_date(std::string_view s) {
    using namespace std::chrono;
    static constexpr std::array<std::string_view, 12> kMonths{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                              "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    s = utf8::trim(s);
    if (const auto comma = s.find(','); comma != std::string_view::npos) s = utf8::trim(s.substr(comma + 1));
    // "01 Jan 2024 ..."
    const auto sp1 = s.find(' ');
    if (sp1 == std::string_view::npos) return std::nullopt;
    const auto sp2 = s.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos) return std::nullopt;
    const std::string day_s(s.substr(0, sp1));
    const std::string_view mon_s = s.substr(sp1 + 1, sp2 - sp1 - 1);
    const std::string year_s(s.substr(sp2 + 1, 4));
    unsigned mon = 0;
    for (unsigned i = 0; i < kMonths.size(); ++i) {
        if (kMonths[i] == mon_s) mon = i + 1;
    }
    if (mon == 0) return std::nullopt;
    char* end = nullptr;
    const long d = std::strtol(day_s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    const long y = std::strtol(year_s.c_str(), &end, 10);
    if (*end != '\0') return std::nullopt;
    const year_month_day ymd{year{static_cast<int>(y)}, month{mon}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

Feed parse(std::string_view xml) {
    const std::size_t rss_pos = find_open_tag(xml, "rss", 0);
    if (rss_pos == std::string_view::npos) throw FeedParseError("payload is not an RSS document", std::string(xml));
    const Element channel = find_element(xml, "channel", rss_pos, xml.size());
    if (!channel.found) throw FeedParseError("RSS document has no <channel>", std::string(xml));
    if (xml.find("</rss>") == std::string_view::npos) throw FeedParseError("missing </rss>", std::string(xml));

    Feed feed;
    const std::size_t channel_start = static_cast<std::size_t>(channel.inner.data() - xml.data());
    const std::size_t channel_end = channel_start + channel.inner.size();

    const Element total = find_element(xml, "opensearch:totalResults", channel_start, channel_end);
    if (total.found) {
        const std::string t = text_of(total.inner);
        char* end = nullptr;
        const long long v = std::strtoll(t.c_str(), &end, 10);
        if (!t.empty() && *end == '\0' && v >= 0) feed.total_results = v;
    }

    std::size_t cursor = channel_start;
    while (true) {
        const Element item = find_element(xml, "item", cursor, channel_end);
        if (!item.found) break;
        cursor = item.end;
        const std::size_t s = static_cast<std::size_t>(item.inner.data() - xml.data());
        const std::size_t e = s + item.inner.size();
        FeedItem fi;
        if (auto t = find_element(xml, "title", s, e); t.found) fi.title = text_of(t.inner);
        if (auto l = find_element(xml, "link", s, e); l.found) fi.link = text_of(l.inner);
        if (auto src = find_element(xml, "source", s, e); src.found) fi.outlet = text_of(src.inner);
        if (auto d = find_element(xml, "pubDate", s, e); d.found) fi.published = parse_pub_date(text_of(d.inner));
        feed.items.push_back(std::move(fi));
    }
    return feed;
}

}  // namespace hscan::rss

#include "hscan/scanar/html_text.hpp"

#include <array>
#include <cctype>

#include "hscan/core/utf8.hpp"
#include "hscan/scanar/rss.hpp"

namespace hscan::html {

namespace {

std::string lower(std::string_view s) { return utf8::ascii_lower(s); }

// Case-insensitive search for `needle` (already lowercase).
std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from = 0) {
    if (needle.empty() || hay.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            char c = hay[i + k];
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (c != needle[k]) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::string_view::npos;
}

// Inner content of the first <tag ...>...</tag>, or the whole input.
std::string_view section(std::string_view html, std::string_view tag) {
    const std::string open = "<" + std::string(tag);
    std::size_t pos = ifind(html, open);
    while (pos != std::string_view::npos) {
        const std::size_t after = pos + open.size();
        if (after < html.size() && (html[after] == '>' || html[after] == ' ' || html[after] == '\n' || html[after] == '\t')) break;
        pos = ifind(html, open, pos + 1);
    }
    if (pos == std::string_view::npos) return {};
    const std::size_t gt = html.find('>', pos);
    if (gt == std::string_view::npos) return {};
    const std::string close = "</" + std::string(tag);
    const std::size_t end = ifind(html, close, gt + 1);
    return html.substr(gt + 1, end == std::string_view::npos ? std::string_view::npos : end - gt - 1);
}

constexpr std::array<std::string_view, 6> kSkipped{"script", "style", "noscript", "template", "svg", "head"};
constexpr std::array<std::string_view, 16> kBlocks{"p",  "div", "br", "li", "h1", "h2", "h3", "h4",
                                                   "h5", "h6",  "tr", "section", "article", "header", "footer", "blockquote"};

std::string tag_name(std::string_view tag_body) {
    std::size_t i = 0;
    if (i < tag_body.size() && tag_body[i] == '/') ++i;
    std::size_t j = i;
    while (j < tag_body.size() && (std::isalnum(static_cast<unsigned char>(tag_body[j])) != 0)) ++j;
    return lower(tag_body.substr(i, j - i));
}

}  // namespace

std::string extract_text(std::string_view html) {
    std::string_view body = section(html, "article");
    if (utf8::trim(body).empty()) body = section(html, "body");
    if (body.empty()) body = html;

    std::string raw;
    raw.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (c != '<') {
            raw.push_back(c);
            ++i;
            continue;
        }
        if (body.substr(i, 4) == "<!--") {
            const std::size_t end = body.find("-->", i + 4);
            i = end == std::string_view::npos ? body.size() : end + 3;
            continue;
        }
        const std::size_t gt = body.find('>', i);
        if (gt == std::string_view::npos) break;
        const std::string name = tag_name(body.substr(i + 1, gt - i - 1));
        const bool closing = i + 1 < body.size() && body[i + 1] == '/';
        i = gt + 1;
        if (!closing) {
            bool skipped = false;
            for (auto s : kSkipped) {
                if (name == s) {
                    const std::size_t end = ifind(body, "</" + std::string(s), i);
                    if (end == std::string_view::npos) {
                        i = body.size();
                    } else {
                        const std::size_t end_gt = body.find('>', end);
                        i = end_gt == std::string_view::npos ? body.size() : end_gt + 1;
                    }
                    skipped = true;
                    break;
                }
            }
            if (skipped) continue;
        }
        bool block = false;
        for (auto b : kBlocks) block = block || name == b;
        raw.push_back(block ? '\n' : ' ');
    }

    const std::string decoded = rss::decode_entities(raw);
    // Collapse runs of spaces; keep single newlines between blocks.
    std::string out;
    out.reserve(decoded.size());
    bool pending_space = false;
    bool pending_newline = false;
    for (char c : decoded) {
        if (c == '\n') {
            pending_newline = true;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = true;
        } else {
            if (!out.empty()) {
                if (pending_newline) out.push_back('\n');
                else if (pending_space) out.push_back(' ');
            }
            pending_space = pending_newline = false;
            out.push_back(c);
        }
    }
    return out;
}

bool looks_like_html(std::string_view content_type, std::string_view body) {
    if (!content_type.empty()) {
        const std::string ct = lower(content_type);
        return ct.find("text/html") != std::string::npos || ct.find("application/xhtml") != std::string::npos;
    }
    return ifind(body.substr(0, 1024), "<html") != std::string_view::npos ||
           ifind(body.substr(0, 1024), "<!doctype html") != std::string_view::npos;
}

}  // namespace hscan::html

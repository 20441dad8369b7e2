#include "hscan/ranking/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hscan/core/errors.hpp"
#include "hscan/core/utf8.hpp"

namespace hscan::ranking {

namespace {

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
    }
    if (cp <= 0xBF) return false;               // Latin-1 punctuation and symbols
    if (cp == 0xD7 || cp == 0xF7) return false;  // × ÷
    if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp == 0xFFFD || cp == 0xFEFF) return false;
    return true;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t current_len = 0;
    const auto flush = [&] {
        if (current_len >= 2) tokens.push_back(current);
        current.clear();
        current_len = 0;
    };
    for (char32_t cp : utf8::decode(text)) {
        if (!is_word_char(cp)) {
            flush();
            continue;
        }
        if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
        utf8::append(current, cp);
        ++current_len;
    }
    flush();
    return tokens;
}

TfidfVectorizer TfidfVectorizer::fit(std::span<const std::string> documents) {
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        const auto tokens = tokenize(doc);
        const std::set<std::string> unique(tokens.begin(), tokens.end());
        for (const auto& t : unique) ++df[t];
    }
    if (df.empty()) throw InputError("tf-idf: empty vocabulary");

    TfidfVectorizer v;
    const double n = static_cast<double>(documents.size());
    v.idf_.reserve(df.size());
    std::uint32_t index = 0;
    for (const auto& [term, count] : df) {
        v.vocabulary_.emplace(term, index++);
        v.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return v;
}

SparseVector TfidfVectorizer::transform(std::string_view text) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : tokenize(text)) {
        if (auto it = vocabulary_.find(t); it != vocabulary_.end()) counts[it->second] += 1.0;
    }
    SparseVector out;
    double sq = 0.0;
    for (auto& [idx, tf] : counts) {
        const double w = tf * idf_[idx];
        out.index.push_back(idx);
        out.value.push_back(w);
        sq += w * w;
    }
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (double& x : out.value) x *= inv;
    }
    return out;
}

}  // namespace hscan::ranking

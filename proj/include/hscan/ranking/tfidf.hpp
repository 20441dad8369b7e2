#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hscan::ranking {

struct SparseVector {
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    bool empty() const { return index.empty(); }
};

/// Lowercased word tokens of at least two characters. Word characters are
/// ASCII letters, digits, underscore and non-punctuation code points ≥ U+0080.
std::vector<std::string> tokenize(std::string_view text);

/// Unigram TF-IDF with smoothed idf = ln((1 + n) / (1 + df)) + 1 and
/// L2-normalised rows. Terms are indexed in lexicographic order.
class TfidfVectorizer {
public:
    /// Throws InputError when the documents yield no terms.
    static TfidfVectorizer fit(std::span<const std::string> documents);

    SparseVector transform(std::string_view text) const;

    std::size_t size() const { return idf_.size(); }
    const std::unordered_map<std::string, std::uint32_t>& vocabulary() const { return vocabulary_; }
    const std::vector<double>& idf() const { return idf_; }

private:
    std::unordered_map<std::string, std::uint32_t> vocabulary_;
    std::vector<double> idf_;
};

}  // namespace hscan::ranking

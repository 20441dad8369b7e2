#include <cstdint>

#include "hscan/core/utf8.hpp"
#include "hscan/embedding/embedding.hpp"

namespace hscan::embedding {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::vector<char32_t> normalise(std::string_view text) {
    std::vector<char32_t> out{U' '};
    for (char32_t cp : utf8::decode(utf8::ascii_lower(text))) {
        const bool space = cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v';
        if (space) {
            if (out.back() != U' ') out.push_back(U' ');
        } else {
            out.push_back(cp);
        }
    }
    if (out.back() != U' ') out.push_back(U' ');
    return out;
}

}  // namespace

HashingBackend::HashingBackend(std::size_t dimension, std::size_t min_n, std::size_t max_n)
    : dimension_(dimension), min_n_(min_n), max_n_(max_n) {
    if (dimension_ == 0) throw BackendConfigError("hashing backend: dimension must be positive");
    if (min_n_ == 0 || max_n_ < min_n_) throw BackendConfigError("hashing backend: invalid n-gram range");
}

Vector HashingBackend::encode_one(std::string_view text) const {
    Vector v(dimension_, 0.0);
    const std::vector<char32_t> cps = normalise(text);
    std::string gram;
    for (std::size_t n = min_n_; n <= max_n_; ++n) {
        if (cps.size() < n) break;
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            gram.clear();
            for (std::size_t k = 0; k < n; ++k) utf8::append(gram, cps[i + k]);
            const std::uint64_t h = fnv1a(gram);
            const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
            v[h % dimension_] += sign;
        }
    }
    // Signed collisions can cancel exactly; keep a non-zero direction.
    bool all_zero = true;
    for (double x : v) all_zero = all_zero && x == 0.0;
    if (all_zero) v[fnv1a(text) % dimension_] = 1.0;
    return v;
}

std::vector<Vector> HashingBackend::encode(std::span<const std::string> texts) {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode_one(t));
    return out;
}

}  // namespace hscan::embedding

#include "hscan/embedding/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hscan/core/utf8.hpp"

namespace hscan::embedding {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<Vector> embed(Backend& backend, std::span<const std::string> texts) {
    if (texts.empty()) throw InputError("embed: no texts");
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (utf8::trim(texts[i]).empty()) throw InputError(fmt::format("no reference text (item {})", i));
    }
    std::vector<Vector> out = backend.encode(texts);
    if (out.size() != texts.size()) {
        throw TransportError(fmt::format("{} returned {} vectors for {} texts", backend.name(), out.size(), texts.size()),
                             false);
    }
    const std::size_t dim = out.front().size();
    for (auto& v : out) {
        if (v.size() != dim) throw TransportError(fmt::format("{} returned ragged vectors", backend.name()), false);
        for (double x : v) {
            if (!std::isfinite(x)) throw TransportError(fmt::format("{} returned non-finite values", backend.name()), false);
        }
        const double n = norm(v);
        if (n == 0.0) throw InputError(fmt::format("{} produced a zero vector", backend.name()));
        for (double& x : v) x /= n;
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InputError(fmt::format("cosine: dimension mismatch {} vs {}", a.size(), b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw InputError("cosine: zero-norm input");
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

SimilarityMatrix similarity_matrix(std::span<const Vector> vectors) {
    if (vectors.empty()) throw InputError("similarity_matrix: no vectors");
    const std::size_t n = vectors.size();
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        m[i * n + i] = cosine_similarity(vectors[i], vectors[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double c = cosine_similarity(vectors[i], vectors[j]);
            m[i * n + j] = c;
            m[j * n + i] = c;
        }
    }
    return SimilarityMatrix(n, std::move(m));
}

}  // namespace hscan::embedding

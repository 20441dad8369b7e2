#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hscan/core/errors.hpp"
#include "hscan/scanar/transport.hpp"

namespace hscan::embedding {

using Vector = std::vector<double>;

/// Text encoder. Implementations return raw (unnormalised) vectors; `embed`
/// normalises them.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() = 0;
    virtual bool deterministic() const = 0;
    /// True when concurrent calls into `encode` are safe.
    virtual bool reentrant() const = 0;
    virtual std::vector<Vector> encode(std::span<const std::string> texts) = 0;
};

/// Rejects empty input, then returns one L2-normalised vector per text.
std::vector<Vector> embed(Backend& backend, std::span<const std::string> texts);

double norm(std::span<const double> v);

/// dot(a, b) / (|a| |b|). Throws InputError on dimension mismatch or zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Dense symmetric matrix of pairwise cosines, row-major.
class SimilarityMatrix {
public:
    SimilarityMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {}
    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

private:
    std::size_t n_;
    std::vector<double> values_;
};

SimilarityMatrix similarity_matrix(std::span<const Vector> vectors);

/// Signed feature hashing of character 3- to 5-grams (over code points of
/// the lowercased, whitespace-collapsed, space-padded text).
class HashingBackend final : public Backend {
public:
    explicit HashingBackend(std::size_t dimension = 512, std::size_t min_n = 3, std::size_t max_n = 5);

    std::string name() const override { return "hashing"; }
    std::size_t dimension() override { return dimension_; }
    bool deterministic() const override { return true; }
    bool reentrant() const override { return true; }
    std::vector<Vector> encode(std::span<const std::string> texts) override;

    Vector encode_one(std::string_view text) const;

private:
    std::size_t dimension_;
    std::size_t min_n_;
    std::size_t max_n_;
};

struct ExternalConfig {
    std::string endpoint;         ///< POST target
    std::string model;            ///< sent as "model"
    std::string auth_token;       ///< Bearer token; empty for none
    std::size_t batch_size = 32;
    std::size_t max_chars = 2000; ///< encoder input limit in characters

    /// HSCAN_EMBED_URL, HSCAN_EMBED_MODEL, HSCAN_EMBED_TOKEN, HSCAN_EMBED_BATCH, HSCAN_EMBED_MAX_CHARS.
    static ExternalConfig from_env();
};

/// Remote encoder speaking a small JSON protocol:
///   request  {"model": "...", "inputs": ["text", ...]}
///   response {"embeddings": [[...], ...]}
/// The dimension is discovered on first use and cached.
class ExternalBackend final : public Backend {
public:
    ExternalBackend(ExternalConfig config, std::shared_ptr<Transport> transport);

    std::string name() const override { return "external:" + config_.model; }
    std::size_t dimension() override;
    bool deterministic() const override { return true; }
    bool reentrant() const override { return false; }
    std::vector<Vector> encode(std::span<const std::string> texts) override;

    std::size_t truncated_inputs() const { return truncated_; }

private:
    std::vector<Vector> encode_batch(std::span<const std::string> texts);

    ExternalConfig config_;
    std::shared_ptr<Transport> transport_;
    std::mutex mutex_;
    std::optional<std::size_t> dimension_;
    std::size_t truncated_ = 0;
};

/// Raised for backend misconfiguration (distinct from transport failures).
class BackendConfigError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

}  // namespace hscan::embedding

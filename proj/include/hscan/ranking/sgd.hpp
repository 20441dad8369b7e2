#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "hscan/ranking/tfidf.hpp"

namespace hscan::ranking {

using Rng = std::mt19937_64;

struct SgdHyperparams {
    double l2_alpha = 1e-4;
    int max_epochs = 1000;
    double tolerance = 1e-3;
    int n_iter_no_change = 5;
};

/// Linear log-loss model over TF-IDF features, trained by plain SGD with an
/// L2 penalty and the "optimal" step size eta_t = 1 / (alpha (t0 + t)).
class SgdClassifier {
public:
    /// `labels[i]` is true for an include. Both classes must be present.
    static SgdClassifier train(std::span<const std::string> texts, const std::vector<bool>& labels,
                               const SgdHyperparams& hp, Rng& rng);

    double decision(const SparseVector& x) const;
    double decision(std::string_view text) const { return decision(vectorizer_.transform(text)); }
    /// Logistic probability of inclusion.
    double probability(std::string_view text) const;

    const TfidfVectorizer& vectorizer() const { return vectorizer_; }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }
    /// Regularised mean log-loss on the training set after each epoch.
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }
    int epochs_run() const { return static_cast<int>(epoch_losses_.size()); }

private:
    TfidfVectorizer vectorizer_;
    std::vector<double> weights_;
    double bias_ = 0.0;
    std::vector<double> epoch_losses_;
};

double logistic(double z);

}  // namespace hscan::ranking

#include "hscan/ranking/sgd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "hscan/core/errors.hpp"

namespace hscan::ranking {

double logistic(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(-y p)) evaluated without overflow.
double log_loss(double p, double y) {
    const double z = p * y;
    if (z > 18.0) return std::exp(-z);
    if (z < -18.0) return -z;
    return std::log1p(std::exp(-z));
}

// d/dp of log_loss.
double log_dloss(double p, double y) {
    const double z = p * y;
    if (z > 18.0) return std::exp(-z) * -y;
    if (z < -18.0) return -y;
    return -y / (std::exp(z) + 1.0);
}

double sparse_dot(const std::vector<double>& w, const SparseVector& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.index.size(); ++k) s += w[x.index[k]] * x.value[k];
    return s;
}

}  // namespace

SgdClassifier SgdClassifier::train(std::span<const std::string> texts, const std::vector<bool>& labels,
                                   const SgdHyperparams& hp, Rng& rng) {
    if (texts.size() != labels.size()) throw InputError("sgd: texts and labels differ in length");
    const auto n_pos = std::count(labels.begin(), labels.end(), true);
    if (n_pos == 0 || n_pos == static_cast<long>(labels.size())) {
        throw InputError("sgd: training data must contain both includes and excludes");
    }
    if (hp.l2_alpha <= 0.0 || hp.max_epochs < 1) throw InputError("sgd: invalid hyperparameters");

    SgdClassifier model;
    model.vectorizer_ = TfidfVectorizer::fit(texts);
    const std::size_t n = texts.size();
    std::vector<SparseVector> xs;
    xs.reserve(n);
    for (const auto& t : texts) xs.push_back(model.vectorizer_.transform(t));
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = labels[i] ? 1.0 : -1.0;

    const double alpha = hp.l2_alpha;
    // Step-size offset so that the first step has magnitude ~ typw.
    const double typw = std::sqrt(1.0 / std::sqrt(alpha));
    const double eta0 = typw / std::max(1.0, std::abs(log_dloss(-typw, 1.0)));
    const double t0 = 1.0 / (eta0 * alpha);

    // w = wscale * v, so the L2 shrink is O(1) per step.
    std::vector<double> v(model.vectorizer_.size(), 0.0);
    double wscale = 1.0;
    double bias = 0.0;
    double t = 1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int no_improvement = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sumloss = 0.0;
        for (std::size_t i : order) {
            const SparseVector& x = xs[i];
            const double p = sparse_dot(v, x) * wscale + bias;
            const double eta = 1.0 / (alpha * (t0 + t - 1.0));
            sumloss += log_loss(p, ys[i]);
            const double dloss = std::clamp(log_dloss(p, ys[i]), -1e12, 1e12);
            const double update = -eta * dloss;

            wscale *= std::max(0.0, 1.0 - eta * alpha);
            if (wscale < 1e-9) {
                for (double& w : v) w *= wscale;
                wscale = 1.0;
            }
            if (update != 0.0) {
                const double step = update / wscale;
                for (std::size_t k = 0; k < x.index.size(); ++k) v[x.index[k]] += step * x.value[k];
                bias += update;
            }
            t += 1.0;
        }

        // Regularised objective on the full training set.
        double objective = 0.0;
        double sq = 0.0;
        for (double w : v) sq += w * w;
        sq *= wscale * wscale;
        for (std::size_t i = 0; i < n; ++i) objective += log_loss(sparse_dot(v, xs[i]) * wscale + bias, ys[i]);
        model.epoch_losses_.push_back(objective / static_cast<double>(n) + 0.5 * alpha * sq);

        if (sumloss > best_loss - hp.tolerance * static_cast<double>(n)) ++no_improvement;
        else no_improvement = 0;
        best_loss = std::min(best_loss, sumloss);
        if (no_improvement >= hp.n_iter_no_change) break;
    }

    model.weights_.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) model.weights_[k] = v[k] * wscale;
    model.bias_ = bias;
    for (double w : model.weights_) {
        if (!std::isfinite(w)) throw Error("sgd: training diverged");
    }
    return model;
}

double SgdClassifier::decision(const SparseVector& x) const { return sparse_dot(weights_, x) + bias_; }

double SgdClassifier::probability(std::string_view text) const { return logistic(decision(text)); }

}  // namespace hscan::ranking

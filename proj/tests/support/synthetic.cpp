#include "synthetic.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "hscan/core/csv.hpp"

namespace hscan::testkit {

namespace {

const std::vector<std::string> kSignal{"glucose",  "sensor",  "wearable", "insulin", "diabetic", "patch",
                                       "implant",  "monitor", "reading",  "biosensor", "glycaemic", "needle"};
const std::vector<std::string> kNoise{"football", "election", "weather", "market",   "recipe",  "travel",
                                      "concert",  "school",   "bridge",  "festival", "museum",  "traffic",
                                      "harbour",  "airline",  "budget",  "theatre",  "rainfall", "library"};
const std::vector<std::string> kCommon{"report", "new",   "study",   "says",  "people", "year",
                                       "week",   "today", "local",   "company", "plans", "health",
                                       "service", "patients", "trial", "launch", "team",  "data"};

std::string pick(const std::vector<std::string>& v, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
}

std::string join_words(std::vector<std::string> words, std::mt19937_64& rng) {
    std::shuffle(words.begin(), words.end(), rng);
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

// Relevant records spread evenly so the id order carries no signal.
std::vector<bool> spread(std::size_t n, std::size_t p, std::mt19937_64& rng) {
    std::vector<bool> rel(n, false);
    std::fill(rel.begin(), rel.begin() + static_cast<long>(p), true);
    std::shuffle(rel.begin(), rel.end(), rng);
    return rel;
}

}  // namespace

eval::Dataset two_cluster_corpus(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    eval::Dataset d;
    d.relevant = spread(n, p, rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> words;
        for (int k = 0; k < 8; ++k) words.push_back(pick(d.relevant[i] ? kSignal : kNoise, rng));
        for (int k = 0; k < 8; ++k) words.push_back(pick(kCommon, rng));
        d.ids.push_back(fmt::format("rec-{:04}", i + 1));
        d.texts.push_back(join_words(std::move(words), rng));
    }
    return d;
}

eval::Dataset overlapping_corpus(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    eval::Dataset d;
    d.relevant = spread(n, p, rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double signal_share = d.relevant[i] ? 0.10 : 0.06;
        std::vector<std::string> words;
        for (int k = 0; k < 16; ++k) {
            const double x = u(rng);
            if (x < signal_share) words.push_back(pick(kSignal, rng));
            else if (x < 0.5) words.push_back(pick(kNoise, rng));
            else words.push_back(pick(kCommon, rng));
        }
        d.ids.push_back(fmt::format("rec-{:04}", i + 1));
        d.texts.push_back(join_words(std::move(words), rng));
    }
    return d;
}

std::map<std::string, int> noisy_llm_bits(const eval::Dataset& data, double accuracy, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution flip(1.0 - accuracy);
    std::map<std::string, int> bits;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int gold = data.relevant[i] ? 1 : 0;
        bits[data.ids[i]] = flip(rng) ? 1 - gold : gold;
    }
    return bits;
}

std::string dataset_csv(const eval::Dataset& data) {
    std::string out;
    csv::write_row(out, {"id", "title", "abstract", "decision"});
    for (std::size_t i = 0; i < data.size(); ++i) {
        csv::write_row(out, {data.ids[i], fmt::format("Item {}", i + 1), data.texts[i],
                             data.relevant[i] ? "Include" : "Exclude"});
    }
    return out;
}

}  // namespace hscan::testkit

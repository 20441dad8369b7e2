#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hscan/eval/simulation.hpp"

namespace hscan::testkit {

/// Relevant records draw most words from a vocabulary the others never use.
eval::Dataset two_cluster_corpus(std::size_t n, std::size_t p, std::uint64_t seed);

/// Both classes share most of their vocabulary; relevance only tilts the
/// word distribution, so text rankers separate the classes poorly.
eval::Dataset overlapping_corpus(std::size_t n, std::size_t p, std::uint64_t seed);

/// Gold labels with each bit flipped independently with probability 1 - accuracy.
std::map<std::string, int> noisy_llm_bits(const eval::Dataset& data, double accuracy, std::uint64_t seed);

/// The dataset as a CSV with columns id,title,abstract,decision.
std::string dataset_csv(const eval::Dataset& data);

}  // namespace hscan::testkit

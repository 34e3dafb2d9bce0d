#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topicforge/matrix.hpp"

namespace topicforge::fixtures {

struct Pool {
    std::string name;
    std::vector<std::string> words;
};

/// Eight themed, pairwise disjoint word pools of 15 words each.
const std::vector<Pool>& keyword_pools();

struct CorpusSpec {
    std::string corpus_id = "synthetic";
    std::vector<std::size_t> pools = {0, 1, 2, 3, 4, 5}; ///< indices into keyword_pools()
    std::size_t docs_per_pool = 100;
    std::size_t min_words = 6;
    std::size_t max_words = 10;
    std::size_t utterances_per_session = 25;
    bool client_turns = true; ///< interleave client turns that role selection must drop
    std::uint64_t seed = 7;
};

struct SyntheticCorpus {
    std::string jsonl;           ///< transcript JSON Lines
    std::vector<int> truth;      ///< pool index per therapist utterance, in file order
    std::vector<std::string> texts; ///< therapist utterance texts, in file order
};

SyntheticCorpus make_corpus(const CorpusSpec& spec);

/// Gaussian blobs: `per_blob` points around each center, isotropic sigma.
struct Blobs {
    Matrix points;
    std::vector<int> truth;
};

/// `centers` rows are the blob means.
Blobs gaussian_blobs(const Matrix& centers, std::size_t per_blob, double sigma, std::uint64_t seed);

/// `count` centers in `dim` dimensions with pairwise distance at least `min_separation`.
Matrix separated_centers(std::size_t count, std::size_t dim, double min_separation, std::uint64_t seed);

/// Adjusted Rand index of two labelings (noise -1 treated as its own label).
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

} // namespace topicforge::fixtures

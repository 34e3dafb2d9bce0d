#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/embedding.hpp"
#include "topicforge/matrix.hpp"

namespace topicforge {

/// Topic id reserved for the consolidated "Others" category (HDBSCAN noise included).
inline constexpr int kOthersTopicId = -1;

struct Vocabulary {
    std::vector<std::string> terms; ///< sorted, unique
    std::vector<std::size_t> doc_frequency;
    std::unordered_map<std::string, std::size_t> term_index;

    std::size_t size() const { return terms.size(); }
    std::optional<std::size_t> find(const std::string& term) const;

    nlohmann::json to_json() const;
    static Vocabulary from_json(const nlohmann::json& j);
};

struct RepresentParams {
    std::size_t ngram_max = 2;
    std::size_t min_df = 2;
    std::size_t top_k = 10;
    std::size_t mmr_candidates = 30;
    double mmr_lambda = 0.9;
    std::size_t term_vector_dim = 512;
    std::uint64_t term_vector_seed = 0;
    std::size_t representative_docs = 4;

    void validate() const;
    nlohmann::json to_json() const;
    static RepresentParams from_json(const nlohmann::json& j);
};

/// Per-class bag-of-words. Rows of `counts` follow `class_ids` (ascending).
struct ClassTermCounts {
    Vocabulary vocabulary;
    std::vector<int> class_ids;
    Matrix counts;
};

/// Counts n-grams (1..ngram_max) per class. Documents labelled kOthersTopicId are
/// skipped unless `include_others`. Terms found in fewer than min_df of the counted
/// documents are dropped.
ClassTermCounts tokenize_count(std::span<const std::string> texts, std::span<const int> labels,
                               const RepresentParams& params, bool include_others);

struct CtfidfMatrix {
    std::vector<int> class_ids;
    Matrix weights;                     ///< classes x terms
    double avg_words = 0.0;             ///< A: mean token count per class
    std::vector<double> term_frequency; ///< f_t: corpus frequency per term

    std::optional<std::size_t> row_of(int class_id) const;
};

/// W[c][t] = tf[c][t] * ln(1 + A / f_t).
CtfidfMatrix ctfidf(const Matrix& class_tf, std::vector<int> class_ids);

struct Keyword {
    std::string term;
    double weight = 0.0;

    friend bool operator==(const Keyword&, const Keyword&) = default;
};

/// The k highest-weight non-zero terms of one class row, ties in lexicographic order.
std::vector<Keyword> top_terms(const CtfidfMatrix& matrix, const Vocabulary& vocabulary, std::size_t row,
                               std::size_t k);

/// Greedy maximal marginal relevance: score = lambda * relevance - (1 - lambda) * max
/// cosine to the already selected. Returns candidate indices in selection order.
std::vector<std::size_t> mmr_select(std::span<const Keyword> candidates,
                                    const std::vector<std::vector<double>>& term_vectors, double lambda,
                                    std::size_t k);

/// Arithmetic mean of the member rows.
std::vector<double> topic_centroid(const EmbeddingMatrix& embeddings, std::span<const std::size_t> members);

/// Up to `count` members nearest to the centroid by cosine, ties by lower index.
std::vector<std::size_t> representative_documents(const EmbeddingMatrix& embeddings,
                                                  std::span<const std::size_t> members,
                                                  std::span<const double> centroid, std::size_t count);

enum class LabelSource { keywords, llm, manual, others };

struct Topic {
    int topic_id = 0;
    std::size_t size = 0;
    std::vector<Keyword> keywords;
    std::string label;
    LabelSource label_source = LabelSource::keywords;
    std::vector<double> centroid;
    bool is_other = false;

    nlohmann::json to_json() const;
    static Topic from_json(const nlohmann::json& j);
    friend bool operator==(const Topic&, const Topic&) = default;
};

/// c-TF-IDF candidates re-ranked by MMR; the chosen terms are returned sorted by
/// weight (descending, ties lexicographic).
std::vector<Keyword> select_keywords(const CtfidfMatrix& matrix, const Vocabulary& vocabulary, std::size_t row,
                                     const RepresentParams& params);

struct TopicRepresentation {
    Vocabulary vocabulary;
    CtfidfMatrix ctfidf;
    std::vector<Topic> topics; ///< one per cluster, ascending id; labels are keyword fallbacks
};

/// Bag-of-words, c-TF-IDF, keywords and centroids for every cluster of `labels`.
TopicRepresentation represent_topics(std::span<const std::string> texts, std::span<const int> labels,
                                     const EmbeddingMatrix& embeddings, const RepresentParams& params,
                                     bool include_others);

nlohmann::json to_json(const CtfidfMatrix& m);
CtfidfMatrix ctfidf_from_json(const nlohmann::json& j);

} // namespace topicforge

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicforge {

enum class CoherenceMetric { u_mass, c_v };

std::string_view to_string(CoherenceMetric metric);
CoherenceMetric parse_coherence_metric(std::string_view text);

struct CoherenceParams {
    CoherenceMetric metric = CoherenceMetric::c_v;
    std::size_t top_n = 10;
    std::size_t window = 110;
    double epsilon = 1e-12;

    nlohmann::json to_json() const;
    static CoherenceParams from_json(const nlohmann::json& j);
};

struct CoherenceScore {
    CoherenceMetric metric = CoherenceMetric::c_v;
    std::vector<int> topic_ids;
    std::vector<double> per_topic;
    double mean = 0.0;
    CoherenceParams params;

    nlohmann::json to_json() const;
    static CoherenceScore from_json(const nlohmann::json& j);
    friend bool operator==(const CoherenceScore& a, const CoherenceScore& b) {
        return a.metric == b.metric && a.topic_ids == b.topic_ids && a.per_topic == b.per_topic && a.mean == b.mean;
    }
};

/// Tokenized reference corpus with a token -> (document, position) index. Terms may
/// be n-grams; they match contiguous token runs.
class CoherenceCorpus {
public:
    explicit CoherenceCorpus(std::span<const std::string> documents);

    std::size_t size() const { return docs_.size(); }

    /// Documents containing `term`, ascending.
    std::vector<std::size_t> documents_with(std::string_view term) const;

    /// Boolean sliding windows of width `window` over each document (documents no
    /// longer than the window form one window). Returns per-window membership of
    /// `term` and sets `n_windows`.
    std::vector<bool> windows_with(std::string_view term, std::size_t window, std::size_t& n_windows) const;

private:
    struct Occurrence {
        std::size_t doc;
        std::size_t pos;
    };
    std::vector<Occurrence> occurrences(std::string_view term, std::size_t& length) const;

    std::vector<std::vector<std::string>> docs_;
    std::unordered_map<std::string, std::vector<Occurrence>> index_;
};

/// Sum over m = 2..N, l < m of ln((D(w_m, w_l) + 1) / D(w_l)); words ordered by weight.
double umass_coherence(const std::vector<std::string>& words, const CoherenceCorpus& corpus);

/// Mean over i of cosine(v_i, sum_j v_j) with v_i[j] = NPMI(w_i, w_j) from sliding windows.
double cv_coherence(const std::vector<std::string>& words, const CoherenceCorpus& corpus, std::size_t window = 110,
                    double epsilon = 1e-12);

/// Scores each word list with the selected metric (first top_n words of each).
CoherenceScore score_topics(const std::vector<int>& topic_ids, const std::vector<std::vector<std::string>>& topic_words,
                            const CoherenceCorpus& corpus, const CoherenceParams& params);

} // namespace topicforge

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/coherence.hpp"
#include "topicforge/model.hpp"

namespace topicforge {

/// Coherence of every non-Other topic's keywords against the model's own documents.
CoherenceScore model_coherence(const TopicModel& model, const CoherenceParams& params);

struct MatchBand {
    double lo = 0.9;
    double hi = 1.0;

    bool contains(double c) const { return lo <= c && c <= hi; }
    /// Parses "lo:hi".
    static MatchBand parse(const std::string& text);
};

struct TopicPair {
    int topic_a = 0;
    int topic_b = 0;
    double cosine = 0.0;
};

struct MatchReport {
    MatchBand band;
    std::string model_a;
    std::string model_b;
    std::vector<TopicPair> pairs;   ///< all cross pairs, row-major by topic id
    std::vector<TopicPair> matched; ///< greedy one-to-one within the band, descending cosine

    nlohmann::json to_json() const;
    static MatchReport from_json(const nlohmann::json& j);
};

/// Cosine of non-Other topic centroids. Different provider tags only warn.
MatchReport match_topics(const TopicModel& a, const TopicModel& b, MatchBand band = {});

/// One line per matched pair: ids, labels and cosine.
std::string format_match_table(const MatchReport& report, const TopicModel& a, const TopicModel& b);

} // namespace topicforge

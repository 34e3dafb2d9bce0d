#include "topicforge/coherence.hpp"

#include <cmath>
#include <numeric>

#include "topicforge/errors.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

std::string_view to_string(CoherenceMetric metric) { return metric == CoherenceMetric::c_v ? "c_v" : "u_mass"; }

CoherenceMetric parse_coherence_metric(std::string_view text) {
    if (text == "c_v") return CoherenceMetric::c_v;
    if (text == "u_mass") return CoherenceMetric::u_mass;
    throw Error(ErrorKind::Config, "unknown coherence metric '" + std::string(text) + "'");
}

json CoherenceParams::to_json() const {
    return json{{"metric", to_string(metric)}, {"top_n", top_n}, {"window", window}, {"epsilon", epsilon}};
}

CoherenceParams CoherenceParams::from_json(const json& j) {
    CoherenceParams p;
    if (j.contains("metric")) p.metric = parse_coherence_metric(j.at("metric").get<std::string>());
    p.top_n = j.value("top_n", p.top_n);
    p.window = j.value("window", p.window);
    p.epsilon = j.value("epsilon", p.epsilon);
    if (p.top_n < 2) throw Error(ErrorKind::Config, "coherence top_n must be at least 2");
    if (p.window < 1) throw Error(ErrorKind::Config, "coherence window must be positive");
    return p;
}

json CoherenceScore::to_json() const {
    return json{{"metric", to_string(metric)},
                {"topic_ids", topic_ids},
                {"per_topic", per_topic},
                {"mean", mean},
                {"params", params.to_json()}};
}

CoherenceScore CoherenceScore::from_json(const json& j) {
    CoherenceScore s;
    s.metric = parse_coherence_metric(j.at("metric").get<std::string>());
    s.topic_ids = j.at("topic_ids").get<std::vector<int>>();
    s.per_topic = j.at("per_topic").get<std::vector<double>>();
    s.mean = j.at("mean").get<double>();
    if (j.contains("params")) s.params = CoherenceParams::from_json(j.at("params"));
    return s;
}

CoherenceCorpus::CoherenceCorpus(std::span<const std::string> documents) {
    docs_.reserve(documents.size());
    for (std::size_t d = 0; d < documents.size(); ++d) {
        docs_.push_back(tokenize(documents[d]));
        for (std::size_t p = 0; p < docs_.back().size(); ++p) index_[docs_.back()[p]].push_back({d, p});
    }
}

std::vector<CoherenceCorpus::Occurrence> CoherenceCorpus::occurrences(std::string_view term, std::size_t& length) const {
    const auto parts = tokenize(term);
    length = parts.size();
    std::vector<Occurrence> out;
    if (parts.empty()) return out;
    const auto it = index_.find(parts.front());
    if (it == index_.end()) return out;
    for (const auto& occ : it->second) {
        const auto& doc = docs_[occ.doc];
        if (occ.pos + parts.size() > doc.size()) continue;
        bool match = true;
        for (std::size_t k = 1; k < parts.size() && match; ++k) match = doc[occ.pos + k] == parts[k];
        if (match) out.push_back(occ);
    }
    return out;
}

std::vector<std::size_t> CoherenceCorpus::documents_with(std::string_view term) const {
    std::size_t length = 0;
    std::vector<std::size_t> out;
    for (const auto& occ : occurrences(term, length)) {
        if (out.empty() || out.back() != occ.doc) out.push_back(occ.doc);
    }
    return out;
}

std::vector<bool> CoherenceCorpus::windows_with(std::string_view term, std::size_t window, std::size_t& n_windows) const {
    std::vector<std::size_t> first_window(docs_.size() + 1, 0);
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        const std::size_t len = docs_[d].size();
        first_window[d + 1] = first_window[d] + (len <= window ? 1 : len - window + 1);
    }
    n_windows = first_window.back();
    std::vector<bool> hits(n_windows, false);
    std::size_t length = 0;
    for (const auto& occ : occurrences(term, length)) {
        const std::size_t len = docs_[occ.doc].size();
        if (len <= window) {
            hits[first_window[occ.doc]] = true;
            continue;
        }
        if (length > window) continue;
        // Window s covers [s, s + window); it holds the match iff s <= pos and pos + length <= s + window.
        const std::size_t lo = occ.pos + length > window ? occ.pos + length - window : 0;
        const std::size_t hi = std::min(occ.pos, len - window);
        for (std::size_t s = lo; s <= hi; ++s) hits[first_window[occ.doc] + s] = true;
    }
    return hits;
}

namespace {

std::size_t intersection_size(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

} // namespace

double umass_coherence(const std::vector<std::string>& words, const CoherenceCorpus& corpus) {
    if (words.size() < 2) throw Error(ErrorKind::InsufficientData, "coherence needs at least 2 words");
    std::vector<std::vector<std::size_t>> docs;
    docs.reserve(words.size());
    for (const auto& w : words) {
        docs.push_back(corpus.documents_with(w));
        if (docs.back().empty()) throw Error(ErrorKind::UnknownWord, "'" + w + "' does not occur in the reference corpus");
    }
    double score = 0.0;
    for (std::size_t m = 1; m < words.size(); ++m) {
        for (std::size_t l = 0; l < m; ++l) {
            const auto joint = static_cast<double>(intersection_size(docs[m], docs[l]));
            score += std::log((joint + 1.0) / static_cast<double>(docs[l].size()));
        }
    }
    return score;
}

double cv_coherence(const std::vector<std::string>& words, const CoherenceCorpus& corpus, std::size_t window,
                    double epsilon) {
    if (words.size() < 2) throw Error(ErrorKind::InsufficientData, "coherence needs at least 2 words");
    if (corpus.size() == 0) throw Error(ErrorKind::EmptyCorpus, "coherence needs a reference corpus");
    const std::size_t n = words.size();
    std::size_t n_windows = 0;
    std::vector<std::vector<bool>> hits;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back(corpus.windows_with(words[i], window, n_windows));
        const auto count = static_cast<double>(std::count(hits[i].begin(), hits[i].end(), true));
        if (count == 0.0) throw Error(ErrorKind::UnknownWord, "'" + words[i] + "' does not occur in the reference corpus");
        p[i] = count / static_cast<double>(n_windows);
    }
    std::vector<std::vector<double>> npmi(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t joint = 0;
            for (std::size_t w = 0; w < n_windows; ++w) joint += hits[i][w] && hits[j][w] ? 1 : 0;
            const double pij = static_cast<double>(joint) / static_cast<double>(n_windows) + epsilon;
            npmi[i][j] = std::log(pij / (p[i] * p[j])) / -std::log(pij);
        }
    }
    std::vector<double> total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) total[j] += npmi[i][j];
    }
    const double total_norm = std::sqrt(std::inner_product(total.begin(), total.end(), total.begin(), 0.0));
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vi_norm = std::sqrt(std::inner_product(npmi[i].begin(), npmi[i].end(), npmi[i].begin(), 0.0));
        if (vi_norm == 0.0 || total_norm == 0.0) continue;
        const double c = std::inner_product(npmi[i].begin(), npmi[i].end(), total.begin(), 0.0) / (vi_norm * total_norm);
        score += std::clamp(c, -1.0, 1.0);
    }
    return score / static_cast<double>(n);
}

CoherenceScore score_topics(const std::vector<int>& topic_ids, const std::vector<std::vector<std::string>>& topic_words,
                            const CoherenceCorpus& corpus, const CoherenceParams& params) {
    if (topic_ids.size() != topic_words.size()) throw Error(ErrorKind::DimensionMismatch, "topic ids not aligned with word lists");
    if (topic_ids.empty()) throw Error(ErrorKind::InsufficientData, "coherence needs at least one topic");
    CoherenceScore s;
    s.metric = params.metric;
    s.params = params;
    s.topic_ids = topic_ids;
    for (const auto& words : topic_words) {
        std::vector<std::string> top(words.begin(), words.begin() + std::min(words.size(), params.top_n));
        if (top.size() < 2) {
            warn("topic with fewer than 2 keywords scored as 0 coherence");
            s.per_topic.push_back(0.0);
            continue;
        }
        s.per_topic.push_back(params.metric == CoherenceMetric::c_v
                                  ? cv_coherence(top, corpus, params.window, params.epsilon)
                                  : umass_coherence(top, corpus));
    }
    s.mean = std::accumulate(s.per_topic.begin(), s.per_topic.end(), 0.0) / static_cast<double>(s.per_topic.size());
    return s;
}

} // namespace topicforge

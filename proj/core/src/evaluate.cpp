#include "topicforge/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "topicforge/errors.hpp"
#include "topicforge/matrix.hpp"

namespace topicforge {

using nlohmann::json;

CoherenceScore model_coherence(const TopicModel& model, const CoherenceParams& params) {
    std::vector<int> ids;
    std::vector<std::vector<std::string>> words;
    for (const auto* t : model.non_other_topics()) {
        ids.push_back(t->topic_id);
        std::vector<std::string> w;
        for (const auto& k : t->keywords) w.push_back(k.term);
        words.push_back(std::move(w));
    }
    if (ids.empty()) throw Error(ErrorKind::InsufficientData, "model has no non-Other topics");
    const CoherenceCorpus corpus(model.texts());
    return score_topics(ids, words, corpus, params);
}

MatchBand MatchBand::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::Config, "band must look like lo:hi, got '" + text + "'");
    MatchBand band;
    try {
        std::size_t used = 0;
        band.lo = std::stod(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("lo");
        const auto rest = text.substr(colon + 1);
        band.hi = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("hi");
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::Config, "band must look like lo:hi, got '" + text + "'");
    }
    if (!(band.lo <= band.hi) || band.lo < -1.0 || band.hi > 1.0) {
        throw Error(ErrorKind::Config, "band bounds must satisfy -1 <= lo <= hi <= 1");
    }
    return band;
}

namespace {

json pair_json(const TopicPair& p) { return json{{"topic_a", p.topic_a}, {"topic_b", p.topic_b}, {"cosine", p.cosine}}; }

TopicPair pair_from(const json& j) {
    return {j.at("topic_a").get<int>(), j.at("topic_b").get<int>(), j.at("cosine").get<double>()};
}

double centroid_cosine(const std::vector<double>& u, const std::vector<double>& v) {
    const double nu = squared_norm(u);
    const double nv = squared_norm(v);
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot(u, v) / std::sqrt(nu * nv), -1.0, 1.0);
}

} // namespace

json MatchReport::to_json() const {
    json p = json::array();
    for (const auto& x : pairs) p.push_back(pair_json(x));
    json m = json::array();
    for (const auto& x : matched) m.push_back(pair_json(x));
    return json{{"band", {{"lo", band.lo}, {"hi", band.hi}}},
                {"model_a", model_a},
                {"model_b", model_b},
                {"pairs", p},
                {"matched", m}};
}

MatchReport MatchReport::from_json(const json& j) {
    MatchReport r;
    r.band.lo = j.at("band").at("lo").get<double>();
    r.band.hi = j.at("band").at("hi").get<double>();
    r.model_a = j.value("model_a", std::string());
    r.model_b = j.value("model_b", std::string());
    for (const auto& x : j.at("pairs")) r.pairs.push_back(pair_from(x));
    for (const auto& x : j.at("matched")) r.matched.push_back(pair_from(x));
    return r;
}

MatchReport match_topics(const TopicModel& a, const TopicModel& b, MatchBand band) {
    if (a.provider_tag != b.provider_tag) {
        warn("models were embedded by different providers ('" + a.provider_tag + "' vs '" + b.provider_tag +
             "'); cosines may be meaningless");
    }
    MatchReport report;
    report.band = band;
    report.model_a = a.model_id;
    report.model_b = b.model_id;
    const auto ta = a.non_other_topics();
    const auto tb = b.non_other_topics();
    for (const auto* x : ta) {
        for (const auto* y : tb) {
            if (x->centroid.size() != y->centroid.size()) {
                throw Error(ErrorKind::DimensionMismatch,
                            "centroid dimensions differ: " + std::to_string(x->centroid.size()) + " vs " +
                                std::to_string(y->centroid.size()));
            }
            report.pairs.push_back({x->topic_id, y->topic_id, centroid_cosine(x->centroid, y->centroid)});
        }
    }
    std::vector<TopicPair> candidates;
    for (const auto& p : report.pairs) {
        if (band.contains(p.cosine)) candidates.push_back(p);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const TopicPair& l, const TopicPair& r) { return l.cosine > r.cosine; });
    std::set<int> used_a, used_b;
    for (const auto& p : candidates) {
        if (used_a.contains(p.topic_a) || used_b.contains(p.topic_b)) continue;
        used_a.insert(p.topic_a);
        used_b.insert(p.topic_b);
        report.matched.push_back(p);
    }
    return report;
}

std::string format_match_table(const MatchReport& report, const TopicModel& a, const TopicModel& b) {
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "matched %zu of %zu pairs in [%.3f, %.3f]\n", report.matched.size(),
                  report.pairs.size(), report.band.lo, report.band.hi);
    out += buf;
    for (const auto& p : report.matched) {
        const auto* x = a.find_topic(p.topic_a);
        const auto* y = b.find_topic(p.topic_b);
        std::snprintf(buf, sizeof buf, "%6.4f  ", p.cosine);
        out += buf;
        out += std::to_string(p.topic_a) + " " + (x ? x->label : std::string("?"));
        out += "  <->  ";
        out += std::to_string(p.topic_b) + " " + (y ? y->label : std::string("?"));
        out += '\n';
    }
    return out;
}

} // namespace topicforge

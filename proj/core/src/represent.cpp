#include "topicforge/represent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "topicforge/errors.hpp"
#include "topicforge/labeling.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

std::optional<std::size_t> Vocabulary::find(const std::string& term) const {
    const auto it = term_index.find(term);
    if (it == term_index.end()) return std::nullopt;
    return it->second;
}

json Vocabulary::to_json() const { return json{{"terms", terms}, {"doc_frequency", doc_frequency}}; }

Vocabulary Vocabulary::from_json(const json& j) {
    Vocabulary v;
    v.terms = j.at("terms").get<std::vector<std::string>>();
    v.doc_frequency = j.at("doc_frequency").get<std::vector<std::size_t>>();
    if (v.terms.size() != v.doc_frequency.size()) {
        throw Error(ErrorKind::InputFormat, "vocabulary terms and doc_frequency differ in length");
    }
    for (std::size_t i = 0; i < v.terms.size(); ++i) v.term_index.emplace(v.terms[i], i);
    return v;
}

void RepresentParams::validate() const {
    if (ngram_max < 1) throw Error(ErrorKind::Config, "ngram_max must be at least 1");
    if (top_k < 1) throw Error(ErrorKind::Config, "top_k must be at least 1");
    if (mmr_lambda < 0.0 || mmr_lambda > 1.0) throw Error(ErrorKind::Config, "mmr_lambda must lie in [0, 1]");
    if (term_vector_dim < 8) throw Error(ErrorKind::Config, "term_vector_dim must be at least 8");
}

json RepresentParams::to_json() const {
    return json{{"ngram_max", ngram_max},
                {"min_df", min_df},
                {"top_k", top_k},
                {"mmr_candidates", mmr_candidates},
                {"mmr_lambda", mmr_lambda},
                {"term_vector_dim", term_vector_dim},
                {"term_vector_seed", term_vector_seed},
                {"representative_docs", representative_docs}};
}

RepresentParams RepresentParams::from_json(const json& j) {
    RepresentParams p;
    p.ngram_max = j.value("ngram_max", p.ngram_max);
    p.min_df = j.value("min_df", p.min_df);
    p.top_k = j.value("top_k", p.top_k);
    p.mmr_candidates = j.value("mmr_candidates", p.mmr_candidates);
    p.mmr_lambda = j.value("mmr_lambda", p.mmr_lambda);
    p.term_vector_dim = j.value("term_vector_dim", p.term_vector_dim);
    p.term_vector_seed = j.value("term_vector_seed", p.term_vector_seed);
    p.representative_docs = j.value("representative_docs", p.representative_docs);
    p.validate();
    return p;
}

ClassTermCounts tokenize_count(std::span<const std::string> texts, std::span<const int> labels,
                               const RepresentParams& params, bool include_others) {
    if (texts.size() != labels.size()) throw Error(ErrorKind::DimensionMismatch, "texts and labels differ in length");
    std::set<int> classes;
    bool has_topic = false;
    for (int l : labels) {
        if (l != kOthersTopicId) has_topic = true;
        if (l != kOthersTopicId || include_others) classes.insert(l);
    }
    if (!has_topic) throw Error(ErrorKind::EmptyVocabulary, "no non-noise class to build a vocabulary from");

    std::vector<std::vector<std::string>> doc_terms(texts.size());
    std::map<std::string, std::size_t> df;
    for (std::size_t d = 0; d < texts.size(); ++d) {
        if (!classes.contains(labels[d])) continue;
        doc_terms[d] = ngrams(tokenize(texts[d]), params.ngram_max);
        std::set<std::string> unique(doc_terms[d].begin(), doc_terms[d].end());
        for (const auto& t : unique) ++df[t];
    }

    ClassTermCounts out;
    for (const auto& [term, count] : df) {
        if (count < params.min_df) continue;
        out.vocabulary.term_index.emplace(term, out.vocabulary.terms.size());
        out.vocabulary.terms.push_back(term);
        out.vocabulary.doc_frequency.push_back(count);
    }
    if (out.vocabulary.terms.empty()) {
        throw Error(ErrorKind::EmptyVocabulary, "no term occurs in at least " + std::to_string(params.min_df) + " documents");
    }
    out.class_ids.assign(classes.begin(), classes.end());
    std::map<int, std::size_t> row_of;
    for (std::size_t r = 0; r < out.class_ids.size(); ++r) row_of[out.class_ids[r]] = r;
    out.counts = Matrix(out.class_ids.size(), out.vocabulary.size());
    for (std::size_t d = 0; d < texts.size(); ++d) {
        if (!classes.contains(labels[d])) continue;
        const std::size_t r = row_of.at(labels[d]);
        for (const auto& t : doc_terms[d]) {
            if (auto idx = out.vocabulary.find(t)) out.counts(r, *idx) += 1.0;
        }
    }
    return out;
}

std::optional<std::size_t> CtfidfMatrix::row_of(int class_id) const {
    const auto it = std::find(class_ids.begin(), class_ids.end(), class_id);
    if (it == class_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - class_ids.begin());
}

CtfidfMatrix ctfidf(const Matrix& class_tf, std::vector<int> class_ids) {
    if (class_tf.rows() == 0) throw Error(ErrorKind::InsufficientData, "c-TF-IDF needs at least one class");
    if (class_ids.size() != class_tf.rows()) throw Error(ErrorKind::DimensionMismatch, "class ids not aligned with rows");
    CtfidfMatrix m;
    m.class_ids = std::move(class_ids);
    m.term_frequency.assign(class_tf.cols(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < class_tf.rows(); ++c) {
        for (std::size_t t = 0; t < class_tf.cols(); ++t) {
            m.term_frequency[t] += class_tf(c, t);
            total += class_tf(c, t);
        }
    }
    m.avg_words = total / static_cast<double>(class_tf.rows());
    m.weights = Matrix(class_tf.rows(), class_tf.cols());
    for (std::size_t c = 0; c < class_tf.rows(); ++c) {
        for (std::size_t t = 0; t < class_tf.cols(); ++t) {
            const double tf = class_tf(c, t);
            if (tf == 0.0) continue;
            m.weights(c, t) = tf * std::log(1.0 + m.avg_words / m.term_frequency[t]);
        }
    }
    return m;
}

std::vector<Keyword> top_terms(const CtfidfMatrix& matrix, const Vocabulary& vocabulary, std::size_t row,
                               std::size_t k) {
    std::vector<Keyword> all;
    const auto weights = matrix.weights.row(row);
    for (std::size_t t = 0; t < weights.size(); ++t) {
        if (weights[t] > 0.0) all.push_back({vocabulary.terms[t], weights[t]});
    }
    const auto order = [](const Keyword& x, const Keyword& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        return x.term < y.term;
    };
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), order);
    all.resize(keep);
    return all;
}

std::vector<std::size_t> mmr_select(std::span<const Keyword> candidates,
                                    const std::vector<std::vector<double>>& term_vectors, double lambda,
                                    std::size_t k) {
    if (candidates.empty()) throw Error(ErrorKind::InsufficientData, "mmr_select needs candidates");
    if (term_vectors.size() != candidates.size()) {
        throw Error(ErrorKind::DimensionMismatch, "term vectors not aligned with candidates");
    }
    auto similarity = [&](std::size_t a, std::size_t b) {
        if (squared_norm(term_vectors[a]) == 0.0 || squared_norm(term_vectors[b]) == 0.0) return 0.0;
        return cosine(term_vectors[a], term_vectors[b]);
    };
    std::vector<std::size_t> chosen;
    std::vector<bool> used(candidates.size(), false);
    std::vector<double> max_sim(candidates.size(), -std::numeric_limits<double>::infinity());
    const std::size_t target = std::min(k, candidates.size());
    while (chosen.size() < target) {
        std::size_t best = candidates.size();
        double best_score = 0.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            const double redundancy = chosen.empty() ? 0.0 : max_sim[c];
            const double score = lambda * candidates[c].weight - (1.0 - lambda) * redundancy;
            if (best == candidates.size() || score > best_score) {
                best = c;
                best_score = score;
            }
        }
        used[best] = true;
        chosen.push_back(best);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (!used[c]) max_sim[c] = std::max(max_sim[c], similarity(c, best));
        }
    }
    return chosen;
}

std::vector<double> topic_centroid(const EmbeddingMatrix& embeddings, std::span<const std::size_t> members) {
    if (members.empty()) throw Error(ErrorKind::InsufficientData, "a centroid needs at least one member");
    std::vector<double> c(embeddings.dim(), 0.0);
    for (std::size_t m : members) {
        const auto r = embeddings.row(m);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += r[j];
    }
    for (auto& x : c) x /= static_cast<double>(members.size());
    return c;
}

std::vector<std::size_t> representative_documents(const EmbeddingMatrix& embeddings,
                                                  std::span<const std::size_t> members,
                                                  std::span<const double> centroid, std::size_t count) {
    std::vector<std::pair<double, std::size_t>> scored;
    const bool usable = squared_norm(centroid) > 0.0;
    for (std::size_t m : members) {
        const auto row = embeddings.row_double(m);
        const double sim = usable && squared_norm(row) > 0.0 ? cosine(row, centroid) : 0.0;
        scored.emplace_back(-sim, m);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(count, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

namespace {

std::string_view to_string(LabelSource s) {
    switch (s) {
    case LabelSource::keywords: return "keywords";
    case LabelSource::llm: return "llm";
    case LabelSource::manual: return "manual";
    case LabelSource::others: return "others";
    }
    return "keywords";
}

LabelSource parse_label_source(std::string_view s) {
    if (s == "llm") return LabelSource::llm;
    if (s == "manual") return LabelSource::manual;
    if (s == "others") return LabelSource::others;
    return LabelSource::keywords;
}

} // namespace

json Topic::to_json() const {
    json kw = json::array();
    for (const auto& k : keywords) kw.push_back(json::array({k.term, k.weight}));
    return json{{"topic_id", topic_id}, {"size", size},         {"keywords", kw},
                {"label", label},       {"label_source", to_string(label_source)},
                {"centroid", centroid}, {"is_other", is_other}};
}

Topic Topic::from_json(const json& j) {
    Topic t;
    t.topic_id = j.at("topic_id").get<int>();
    t.size = j.at("size").get<std::size_t>();
    for (const auto& k : j.at("keywords")) t.keywords.push_back({k.at(0).get<std::string>(), k.at(1).get<double>()});
    t.label = j.at("label").get<std::string>();
    t.label_source = parse_label_source(j.value("label_source", std::string("keywords")));
    t.centroid = j.at("centroid").get<std::vector<double>>();
    t.is_other = j.value("is_other", false);
    return t;
}

std::vector<Keyword> select_keywords(const CtfidfMatrix& matrix, const Vocabulary& vocabulary, std::size_t row,
                                     const RepresentParams& params) {
    auto candidates = top_terms(matrix, vocabulary, row, std::max(params.mmr_candidates, params.top_k));
    if (candidates.empty()) return {};
    // Relevance is scaled to [0, 1] so that lambda trades it off against cosine.
    const double top = candidates.front().weight;
    std::vector<Keyword> scaled = candidates;
    for (auto& k : scaled) k.weight /= top;
    std::vector<std::vector<double>> vectors;
    vectors.reserve(candidates.size());
    for (const auto& k : candidates) {
        vectors.push_back(hash_embed(k.term, params.term_vector_dim, params.term_vector_seed));
    }
    std::vector<Keyword> chosen;
    for (std::size_t idx : mmr_select(scaled, vectors, params.mmr_lambda, params.top_k)) {
        chosen.push_back(candidates[idx]);
    }
    std::sort(chosen.begin(), chosen.end(), [](const Keyword& x, const Keyword& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        return x.term < y.term;
    });
    return chosen;
}

TopicRepresentation represent_topics(std::span<const std::string> texts, std::span<const int> labels,
                                     const EmbeddingMatrix& embeddings, const RepresentParams& params,
                                     bool include_others) {
    params.validate();
    if (embeddings.n_docs() != texts.size()) {
        throw Error(ErrorKind::DimensionMismatch, "embeddings not aligned with documents");
    }
    auto counts = tokenize_count(texts, labels, params, include_others);
    TopicRepresentation rep;
    rep.vocabulary = std::move(counts.vocabulary);
    rep.ctfidf = ctfidf(counts.counts, counts.class_ids);
    for (std::size_t r = 0; r < rep.ctfidf.class_ids.size(); ++r) {
        const int id = rep.ctfidf.class_ids[r];
        std::vector<std::size_t> members;
        for (std::size_t d = 0; d < labels.size(); ++d) {
            if (labels[d] == id) members.push_back(d);
        }
        Topic t;
        t.topic_id = id;
        t.size = members.size();
        t.is_other = id == kOthersTopicId;
        t.keywords = select_keywords(rep.ctfidf, rep.vocabulary, r, params);
        t.centroid = topic_centroid(embeddings, members);
        t.label = t.is_other ? "Others" : fallback_label(t.keywords);
        t.label_source = t.is_other ? LabelSource::others : LabelSource::keywords;
        rep.topics.push_back(std::move(t));
    }
    return rep;
}

json to_json(const CtfidfMatrix& m) {
    json rows = json::array();
    for (std::size_t c = 0; c < m.weights.rows(); ++c) {
        json row = json::array();
        const auto w = m.weights.row(c);
        for (std::size_t t = 0; t < w.size(); ++t) {
            if (w[t] != 0.0) row.push_back(json::array({t, w[t]}));
        }
        rows.push_back(std::move(row));
    }
    return json{{"class_ids", m.class_ids},
                {"n_terms", m.weights.cols()},
                {"avg_words", m.avg_words},
                {"term_frequency", m.term_frequency},
                {"rows", rows}};
}

CtfidfMatrix ctfidf_from_json(const json& j) {
    CtfidfMatrix m;
    m.class_ids = j.at("class_ids").get<std::vector<int>>();
    m.avg_words = j.at("avg_words").get<double>();
    m.term_frequency = j.at("term_frequency").get<std::vector<double>>();
    const auto n_terms = j.at("n_terms").get<std::size_t>();
    m.weights = Matrix(m.class_ids.size(), n_terms);
    const auto& rows = j.at("rows");
    if (rows.size() != m.class_ids.size()) throw Error(ErrorKind::InputFormat, "c-TF-IDF rows not aligned with classes");
    for (std::size_t c = 0; c < rows.size(); ++c) {
        for (const auto& e : rows[c]) m.weights(c, e.at(0).get<std::size_t>()) = e.at(1).get<double>();
    }
    return m;
}

} // namespace topicforge

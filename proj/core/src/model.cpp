#include "topicforge/model.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

#include "topicforge/errors.hpp"
#include "topicforge/labeling.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

std::string_view to_string(CurationOp::Kind kind) {
    switch (kind) {
    case CurationOp::Kind::merge: return "merge";
    case CurationOp::Kind::rename: return "rename";
    case CurationOp::Kind::mark_other: return "mark_other";
    case CurationOp::Kind::undo: return "undo";
    }
    return "merge";
}

CurationOp CurationOp::merge(std::vector<std::vector<int>> groups, std::string actor) {
    CurationOp op;
    op.kind = Kind::merge;
    op.groups = std::move(groups);
    op.actor = std::move(actor);
    return op;
}

CurationOp CurationOp::rename(int topic_id, std::string label, std::string actor) {
    CurationOp op;
    op.kind = Kind::rename;
    op.topic_id = topic_id;
    op.label = std::move(label);
    op.actor = std::move(actor);
    return op;
}

CurationOp CurationOp::mark_other(std::vector<int> topic_ids, std::string actor) {
    CurationOp op;
    op.kind = Kind::mark_other;
    op.topic_ids = std::move(topic_ids);
    op.actor = std::move(actor);
    return op;
}

CurationOp CurationOp::undo(std::string actor) {
    CurationOp op;
    op.kind = Kind::undo;
    op.actor = std::move(actor);
    return op;
}

json CurationOp::to_json() const {
    json j{{"kind", to_string(kind)}, {"actor", actor}, {"timestamp", timestamp}};
    switch (kind) {
    case Kind::merge: j["groups"] = groups; break;
    case Kind::rename:
        j["topic_id"] = topic_id;
        j["label"] = label;
        break;
    case Kind::mark_other: j["topic_ids"] = topic_ids; break;
    case Kind::undo: break;
    }
    return j;
}

CurationOp CurationOp::from_json(const json& j) {
    CurationOp op;
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "merge") {
            op.kind = Kind::merge;
            op.groups = j.at("groups").get<std::vector<std::vector<int>>>();
        } else if (kind == "rename") {
            op.kind = Kind::rename;
            op.topic_id = j.at("topic_id").get<int>();
            op.label = j.at("label").get<std::string>();
        } else if (kind == "mark_other") {
            op.kind = Kind::mark_other;
            op.topic_ids = j.at("topic_ids").get<std::vector<int>>();
        } else if (kind == "undo") {
            op.kind = Kind::undo;
        } else {
            throw Error(ErrorKind::InvalidCuration, "unknown curation kind '" + kind + "'");
        }
        op.actor = j.value("actor", std::string("unknown"));
        op.timestamp = j.value("timestamp", std::string());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidCuration, std::string("malformed curation op: ") + e.what());
    }
    return op;
}

json ModelState::to_json() const {
    json topics_json = json::array();
    for (const auto& t : topics) topics_json.push_back(t.to_json());
    json j{{"assignments", assignments},
           {"topics", topics_json},
           {"vocabulary", vocabulary.to_json()},
           {"ctfidf", topicforge::to_json(ctfidf)}};
    j["coherence"] = coherence ? coherence->to_json() : json(nullptr);
    return j;
}

ModelState ModelState::from_json(const json& j) {
    ModelState s;
    s.assignments = j.at("assignments").get<std::vector<int>>();
    for (const auto& t : j.at("topics")) s.topics.push_back(Topic::from_json(t));
    s.vocabulary = Vocabulary::from_json(j.at("vocabulary"));
    s.ctfidf = ctfidf_from_json(j.at("ctfidf"));
    if (j.contains("coherence") && !j.at("coherence").is_null()) s.coherence = CoherenceScore::from_json(j.at("coherence"));
    return s;
}

const Topic* TopicModel::find_topic(int topic_id) const {
    for (const auto& t : state.topics) {
        if (t.topic_id == topic_id) return &t;
    }
    return nullptr;
}

std::vector<const Topic*> TopicModel::non_other_topics() const {
    std::vector<const Topic*> out;
    for (const auto& t : state.topics) {
        if (!t.is_other) out.push_back(&t);
    }
    return out;
}

std::size_t TopicModel::topic_count(bool include_others) const {
    return include_others ? state.topics.size() : non_other_topics().size();
}

std::vector<std::size_t> TopicModel::members(int topic_id) const {
    std::vector<std::size_t> out;
    for (std::size_t d = 0; d < state.assignments.size(); ++d) {
        if (state.assignments[d] == topic_id) out.push_back(d);
    }
    return out;
}

std::vector<std::string> TopicModel::texts() const {
    std::vector<std::string> out;
    out.reserve(documents.size());
    for (const auto& d : documents) out.push_back(d.text);
    return out;
}

namespace {

constexpr const char* kSchema = "topicforge.model/1";

struct TopicMeta {
    std::string label;
    LabelSource source = LabelSource::keywords;
    std::vector<double> centroid;
    std::size_t size = 0;
};

struct Partition {
    std::vector<int> assignments;
    std::map<int, TopicMeta> topics;
};

Partition partition_of(const ModelState& s) {
    Partition p;
    p.assignments = s.assignments;
    for (const auto& t : s.topics) p.topics[t.topic_id] = {t.label, t.label_source, t.centroid, t.size};
    return p;
}

std::vector<double> weighted_mean(const std::vector<const TopicMeta*>& parts) {
    std::vector<double> out;
    std::size_t total = 0;
    for (const auto* m : parts) {
        if (m->centroid.empty() || m->size == 0) continue;
        if (out.empty()) out.assign(m->centroid.size(), 0.0);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(m->size) * m->centroid[j];
        total += m->size;
    }
    for (auto& x : out) x /= static_cast<double>(total);
    return out;
}

void require_known(const Partition& p, int id) {
    if (!p.topics.contains(id)) throw Error(ErrorKind::UnknownTopicId, "topic " + std::to_string(id) + " does not exist");
}

void validate(const Partition& p, const CurationOp& op) {
    switch (op.kind) {
    case CurationOp::Kind::merge: {
        if (op.groups.empty()) throw Error(ErrorKind::InvalidCuration, "merge needs at least one group");
        std::set<int> seen;
        for (const auto& g : op.groups) {
            if (g.size() < 2) throw Error(ErrorKind::InvalidCuration, "each merge group needs at least 2 topics");
            for (int id : g) {
                if (id == kOthersTopicId) throw Error(ErrorKind::InvalidCuration, "the Others topic cannot be merged");
                require_known(p, id);
                if (!seen.insert(id).second) {
                    throw Error(ErrorKind::OverlappingGroups, "topic " + std::to_string(id) + " appears more than once");
                }
            }
        }
        break;
    }
    case CurationOp::Kind::mark_other: {
        if (op.topic_ids.empty()) throw Error(ErrorKind::InvalidCuration, "mark_other needs at least one topic");
        std::set<int> seen;
        for (int id : op.topic_ids) {
            if (id == kOthersTopicId) throw Error(ErrorKind::InvalidCuration, "topic -1 is already Others");
            require_known(p, id);
            if (!seen.insert(id).second) {
                throw Error(ErrorKind::OverlappingGroups, "topic " + std::to_string(id) + " listed twice");
            }
        }
        break;
    }
    case CurationOp::Kind::rename:
        if (op.topic_id == kOthersTopicId) throw Error(ErrorKind::InvalidCuration, "the Others topic cannot be renamed");
        require_known(p, op.topic_id);
        if (trim(op.label).empty()) throw Error(ErrorKind::InvalidCuration, "label must not be empty");
        break;
    case CurationOp::Kind::undo: break;
    }
}

void apply_partition(Partition& p, const CurationOp& op) {
    switch (op.kind) {
    case CurationOp::Kind::merge:
        for (const auto& group : op.groups) {
            const int survivor = *std::min_element(group.begin(), group.end());
            std::vector<const TopicMeta*> parts;
            std::size_t size = 0;
            for (int id : group) {
                parts.push_back(&p.topics.at(id));
                size += p.topics.at(id).size;
            }
            TopicMeta merged = p.topics.at(survivor);
            merged.centroid = weighted_mean(parts);
            merged.size = size;
            const std::set<int> members(group.begin(), group.end());
            for (auto& a : p.assignments) {
                if (members.contains(a)) a = survivor;
            }
            for (int id : group) p.topics.erase(id);
            p.topics[survivor] = std::move(merged);
        }
        break;
    case CurationOp::Kind::mark_other: {
        std::vector<const TopicMeta*> parts;
        std::size_t size = 0;
        TopicMeta others{"Others", LabelSource::others, {}, 0};
        if (auto it = p.topics.find(kOthersTopicId); it != p.topics.end()) others = it->second;
        parts.push_back(&others);
        size += others.size;
        for (int id : op.topic_ids) {
            parts.push_back(&p.topics.at(id));
            size += p.topics.at(id).size;
        }
        auto centroid = weighted_mean(parts);
        const std::set<int> members(op.topic_ids.begin(), op.topic_ids.end());
        for (auto& a : p.assignments) {
            if (members.contains(a)) a = kOthersTopicId;
        }
        for (int id : op.topic_ids) p.topics.erase(id);
        others.centroid = std::move(centroid);
        others.size = size;
        p.topics[kOthersTopicId] = std::move(others);
        break;
    }
    case CurationOp::Kind::rename: {
        auto& t = p.topics.at(op.topic_id);
        t.label = truncate_words(op.label, 5);
        t.source = LabelSource::manual;
        break;
    }
    case CurationOp::Kind::undo: break;
    }
}

ModelState recompute(const Partition& p, const std::vector<std::string>& texts, const RepresentParams& rparams,
                     const CoherenceParams& cparams) {
    ModelState s;
    s.assignments = p.assignments;
    const bool has_topics = std::any_of(p.topics.begin(), p.topics.end(),
                                        [](const auto& kv) { return kv.first != kOthersTopicId; });
    std::map<int, std::vector<Keyword>> keywords;
    if (has_topics) {
        auto counts = tokenize_count(texts, p.assignments, rparams, true);
        s.vocabulary = std::move(counts.vocabulary);
        s.ctfidf = ctfidf(counts.counts, counts.class_ids);
        for (std::size_t r = 0; r < s.ctfidf.class_ids.size(); ++r) {
            keywords[s.ctfidf.class_ids[r]] = select_keywords(s.ctfidf, s.vocabulary, r, rparams);
        }
    }
    std::map<int, std::size_t> sizes;
    for (int a : p.assignments) ++sizes[a];
    for (const auto& [id, meta] : p.topics) {
        if (sizes[id] == 0) continue;
        Topic t;
        t.topic_id = id;
        t.size = sizes[id];
        t.is_other = id == kOthersTopicId;
        t.keywords = keywords[id];
        t.centroid = meta.centroid;
        t.label_source = t.is_other ? LabelSource::others : meta.source;
        if (t.is_other) {
            t.label = "Others";
        } else if (t.label_source == LabelSource::keywords) {
            t.label = fallback_label(t.keywords);
        } else {
            t.label = meta.label;
        }
        s.topics.push_back(std::move(t));
    }
    if (has_topics) {
        std::vector<int> ids;
        std::vector<std::vector<std::string>> words;
        for (const auto& t : s.topics) {
            if (t.is_other) continue;
            ids.push_back(t.topic_id);
            std::vector<std::string> w;
            for (const auto& k : t.keywords) w.push_back(k.term);
            words.push_back(std::move(w));
        }
        const CoherenceCorpus corpus(texts);
        s.coherence = score_topics(ids, words, corpus, cparams);
    }
    return s;
}

TopicModel with_op(const TopicModel& model, CurationOp op) {
    if (op.timestamp.empty()) op.timestamp = current_timestamp();
    TopicModel next = model;
    next.curation_log.push_back(std::move(op));
    next.version = model.version + 1;
    next.state = replay(next, next.curation_log.size());
    return next;
}

} // namespace

ModelState replay(const TopicModel& model, std::size_t upto) {
    std::vector<const CurationOp*> effective;
    for (std::size_t i = 0; i < upto && i < model.curation_log.size(); ++i) {
        const auto& op = model.curation_log[i];
        if (op.kind == CurationOp::Kind::undo) {
            if (effective.empty()) throw Error(ErrorKind::NothingToUndo, "curation log undoes past version 0");
            effective.pop_back();
        } else {
            effective.push_back(&op);
        }
    }
    if (effective.empty()) return model.base;
    Partition p = partition_of(model.base);
    for (const auto* op : effective) {
        validate(p, *op);
        apply_partition(p, *op);
    }
    return recompute(p, model.texts(), model.represent_params, model.coherence_params);
}

TopicModel apply_op(const TopicModel& model, CurationOp op) {
    if (op.kind == CurationOp::Kind::undo) {
        std::size_t depth = 0;
        for (const auto& o : model.curation_log) {
            if (o.kind == CurationOp::Kind::undo) {
                --depth;
            } else {
                ++depth;
            }
        }
        if (depth == 0) throw Error(ErrorKind::NothingToUndo, "no curation operation to undo");
    } else {
        validate(partition_of(model.state), op);
    }
    return with_op(model, std::move(op));
}

TopicModel merge_topics(const TopicModel& model, const std::vector<std::vector<int>>& groups, const std::string& actor) {
    return apply_op(model, CurationOp::merge(groups, actor));
}

TopicModel mark_other(const TopicModel& model, const std::vector<int>& topic_ids, const std::string& actor) {
    return apply_op(model, CurationOp::mark_other(topic_ids, actor));
}

TopicModel rename_topic(const TopicModel& model, int topic_id, const std::string& label, const std::string& actor) {
    return apply_op(model, CurationOp::rename(topic_id, label, actor));
}

TopicModel undo(const TopicModel& model, const std::string& actor) { return apply_op(model, CurationOp::undo(actor)); }

TopicModel assemble_model(const std::vector<Document>& documents, std::shared_ptr<const EmbeddingMatrix> embeddings,
                          const ClusterLabeling& labeling, const TopicRepresentation& representation,
                          const RepresentParams& represent_params, const CoherenceParams& coherence_params) {
    if (labeling.labels.size() != documents.size()) {
        throw Error(ErrorKind::DimensionMismatch, "labeling has " + std::to_string(labeling.labels.size()) +
                                                      " entries for " + std::to_string(documents.size()) + " documents");
    }
    if (embeddings && embeddings->n_docs() != documents.size()) {
        throw Error(ErrorKind::DimensionMismatch, "embeddings not aligned with documents");
    }
    TopicModel m;
    m.corpus_id = documents.empty() ? std::string() : documents.front().corpus_id;
    m.provider_tag = embeddings ? embeddings->provider_tag() : std::string();
    for (const auto& d : documents) m.documents.push_back({d.doc_id, d.text});
    m.represent_params = represent_params;
    m.coherence_params = coherence_params;
    m.embeddings = embeddings;

    Partition p;
    p.assignments = labeling.labels;
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t d = 0; d < p.assignments.size(); ++d) members[p.assignments[d]].push_back(d);
    for (const auto& [id, docs] : members) {
        TopicMeta meta;
        meta.size = docs.size();
        const auto it = std::find_if(representation.topics.begin(), representation.topics.end(),
                                     [id = id](const Topic& t) { return t.topic_id == id; });
        if (it != representation.topics.end()) {
            meta.label = it->label;
            meta.source = it->label_source;
            meta.centroid = it->centroid;
        }
        if (meta.centroid.empty() && embeddings) meta.centroid = topic_centroid(*embeddings, docs);
        if (id == kOthersTopicId) {
            meta.label = "Others";
            meta.source = LabelSource::others;
        }
        p.topics[id] = std::move(meta);
    }
    m.base = recompute(p, m.texts(), represent_params, coherence_params);
    m.state = m.base;

    std::string key = m.corpus_id;
    for (const auto& d : m.documents) key += "\n" + d.doc_id;
    for (int a : labeling.labels) key += "," + std::to_string(a);
    m.model_id = "tfm-" + hex64(fnv1a64(key));
    return m;
}

json TopicModel::to_json() const {
    json log = json::array();
    for (const auto& op : curation_log) log.push_back(op.to_json());
    json docs = json::array();
    for (const auto& d : documents) docs.push_back(json{{"doc_id", d.doc_id}, {"text", d.text}});
    return json{{"schema", kSchema},
                {"model_id", model_id},
                {"corpus_id", corpus_id},
                {"provider_tag", provider_tag},
                {"embeddings_file", embeddings_file},
                {"version", version},
                {"represent_params", represent_params.to_json()},
                {"coherence_params", coherence_params.to_json()},
                {"documents", docs},
                {"base", base.to_json()},
                {"state", state.to_json()},
                {"curation_log", log}};
}

TopicModel TopicModel::from_json(const json& j) {
    try {
        if (j.value("schema", std::string()) != kSchema) {
            throw Error(ErrorKind::InputFormat, "unsupported model schema '" + j.value("schema", std::string()) + "'");
        }
        TopicModel m;
        m.model_id = j.at("model_id").get<std::string>();
        m.corpus_id = j.at("corpus_id").get<std::string>();
        m.provider_tag = j.value("provider_tag", std::string());
        m.embeddings_file = j.value("embeddings_file", std::string());
        m.version = j.at("version").get<std::uint64_t>();
        m.represent_params = RepresentParams::from_json(j.at("represent_params"));
        m.coherence_params = CoherenceParams::from_json(j.at("coherence_params"));
        for (const auto& d : j.at("documents")) {
            m.documents.push_back({d.at("doc_id").get<std::string>(), d.at("text").get<std::string>()});
        }
        m.base = ModelState::from_json(j.at("base"));
        m.state = ModelState::from_json(j.at("state"));
        for (const auto& op : j.at("curation_log")) m.curation_log.push_back(CurationOp::from_json(op));
        if (m.state.assignments.size() != m.documents.size() || m.base.assignments.size() != m.documents.size()) {
            throw Error(ErrorKind::InputFormat, "model assignments not aligned with documents");
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InputFormat, std::string("malformed model: ") + e.what());
    }
}

void TopicModel::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorKind::InputFormat, "cannot write " + tmp.string());
        out << to_json().dump(1) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

TopicModel TopicModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InputFormat, "cannot open model " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InputFormat, path.string() + ": " + e.what());
    }
    auto m = from_json(j);
    if (!m.embeddings_file.empty()) {
        const auto emb = path.parent_path() / m.embeddings_file;
        if (std::filesystem::exists(emb)) {
            auto e = std::make_shared<EmbeddingMatrix>(load_embedding_file(emb));
            if (e->n_docs() == m.n_docs()) {
                m.embeddings = std::move(e);
            } else {
                warn("embedding file " + emb.string() + " is not aligned with the model; ignoring it");
            }
        }
    }
    return m;
}

std::string current_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace topicforge

#include "topicforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "topicforge/errors.hpp"
#include "topicforge/hierarchy.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

template <class F>
auto config_section(const char* name, F&& parse) {
    try {
        return parse();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        throw Error(ErrorKind::Config, std::string(name) + ": " + e.what());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string(name) + ": " + e.what());
    }
}

} // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
    PipelineConfig c;
    config_section("corpora", [&] {
        const auto& list = j.at("corpora");
        if (!list.is_array() || list.empty()) throw Error(ErrorKind::Config, "corpora must be a non-empty array");
        for (const auto& item : list) {
            CorpusSpec s;
            s.path = resolve(base_dir, item.at("path").get<std::string>());
            s.id = item.value("id", s.path.stem().string());
            s.role = parse_role(item.value("role", std::string("therapist")));
            c.corpora.push_back(std::move(s));
        }
        return 0;
    });
    if (j.contains("preprocess")) {
        c.preprocess = config_section("preprocess", [&] {
            const auto& p = j.at("preprocess");
            if (p.is_string()) {
                std::ifstream in(resolve(base_dir, p.get<std::string>()));
                if (!in) throw Error(ErrorKind::Config, "cannot open preprocess file " + p.get<std::string>());
                return PreprocessConfig::from_json(json::parse(in));
            }
            return PreprocessConfig::from_json(p);
        });
    }
    if (j.contains("provider")) {
        c.provider = config_section("provider", [&] { return ProviderConfig::from_json(j.at("provider")); });
        if (!c.provider.path.empty()) c.provider.path = resolve(base_dir, c.provider.path).string();
    }
    if (j.contains("umap")) c.umap = config_section("umap", [&] { return UmapParams::from_json(j.at("umap")); });
    if (j.contains("hdbscan")) {
        c.hdbscan = config_section("hdbscan", [&] { return HdbscanParams::from_json(j.at("hdbscan")); });
    }
    if (j.contains("represent")) {
        c.represent = config_section("represent", [&] { return RepresentParams::from_json(j.at("represent")); });
    }
    if (j.contains("llm") && !j.at("llm").is_null()) {
        c.llm = config_section("llm", [&] { return LlmClientConfig::from_json(j.at("llm")); });
    }
    if (j.contains("evaluate")) {
        config_section("evaluate", [&] {
            const auto& e = j.at("evaluate");
            c.coherence = CoherenceParams::from_json(e);
            if (e.contains("band")) {
                const auto& b = e.at("band");
                if (b.is_string()) {
                    c.band = MatchBand::parse(b.get<std::string>());
                } else {
                    c.band.lo = b.at(0).get<double>();
                    c.band.hi = b.at(1).get<double>();
                }
            }
            return 0;
        });
    }
    config_section("output", [&] {
        if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        else c.output_dir = resolve(base_dir, c.output_dir);
        c.seed = j.value("seed", c.seed);
        if (j.contains("serve")) {
            const auto& s = j.at("serve");
            c.port = s.value("port", c.port);
            c.host = s.value("host", c.host);
            if (s.contains("static_dir")) c.static_dir = resolve(base_dir, s.at("static_dir").get<std::string>());
            if (s.contains("model")) c.serve_model = resolve(base_dir, s.at("model").get<std::string>());
            if (s.contains("compare_model")) {
                c.compare_model = resolve(base_dir, s.at("compare_model").get<std::string>());
            }
        }
        return 0;
    });
    c.validate();
    return c;
}

json PipelineConfig::to_json() const {
    json corpora_json = json::array();
    for (const auto& s : corpora) {
        corpora_json.push_back(json{{"id", s.id}, {"path", s.path.string()}, {"role", to_string(s.role)}});
    }
    json eval = coherence.to_json();
    eval["band"] = json::array({band.lo, band.hi});
    return json{{"corpora", corpora_json},
                {"preprocess", preprocess.to_json()},
                {"provider", provider.to_json()},
                {"umap", umap.to_json()},
                {"hdbscan", hdbscan.to_json()},
                {"represent", represent.to_json()},
                {"llm", llm ? llm->to_json() : json(nullptr)},
                {"evaluate", eval},
                {"output_dir", output_dir.string()},
                {"seed", seed},
                {"serve",
                 {{"port", port},
                  {"host", host},
                  {"static_dir", static_dir.string()},
                  {"model", serve_model.string()},
                  {"compare_model", compare_model.string()}}}};
}

void PipelineConfig::validate() const {
    if (corpora.empty()) throw Error(ErrorKind::Config, "no corpora configured");
    std::set<std::string> ids;
    for (const auto& s : corpora) {
        if (s.id.empty()) throw Error(ErrorKind::Config, "corpus id must not be empty");
        if (s.id.find_first_of("/\\") != std::string::npos || s.id == "." || s.id == "..") {
            throw Error(ErrorKind::Config, "corpus id '" + s.id + "' is not a valid directory name");
        }
        if (!ids.insert(s.id).second) throw Error(ErrorKind::Config, "duplicate corpus id '" + s.id + "'");
    }
    preprocess.validate();
    provider.validate();
    umap.validate();
    hdbscan.validate();
    represent.validate();
    if (band.lo > band.hi) throw Error(ErrorKind::Config, "band lo must not exceed hi");
    if (port <= 0 || port > 65535) throw Error(ErrorKind::Config, "port out of range");
}

namespace {

void apply_seed(PipelineConfig& c) {
    c.umap.seed = c.seed;
    c.provider.seed = c.seed;
    c.represent.term_vector_seed = c.seed;
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(what);
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::Config, std::string(what) + " must be a non-negative integer, got '" + text + "'");
    }
}

} // namespace

PipelineConfig load_config(const fs::path& path, const ConfigOverrides& flags) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    auto c = PipelineConfig::from_json(j, fs::absolute(path).parent_path());
    if (auto v = env("TOPICFORGE_SEED")) c.seed = parse_u64(*v, "TOPICFORGE_SEED");
    if (auto v = env("TOPICFORGE_OUTPUT_DIR")) c.output_dir = *v;
    if (auto v = env("TOPICFORGE_PORT")) c.port = static_cast<int>(parse_u64(*v, "TOPICFORGE_PORT"));
    if (flags.seed) c.seed = *flags.seed;
    if (flags.output_dir) c.output_dir = *flags.output_dir;
    if (flags.port) c.port = *flags.port;
    apply_seed(c);
    c.validate();
    return c;
}

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::documents: return "documents";
    case Stage::embeddings: return "embeddings";
    case Stage::layout: return "layout";
    case Stage::labeling: return "labeling";
    case Stage::topics: return "topics";
    case Stage::model: return "model";
    case Stage::coherence: return "coherence";
    case Stage::matches: return "matches";
    case Stage::viz: return "viz";
    }
    return "documents";
}

Stage parse_stage(std::string_view text) {
    static const std::map<std::string, Stage, std::less<>> names{
        {"documents", Stage::documents}, {"preprocess", Stage::documents}, {"embeddings", Stage::embeddings},
        {"embed", Stage::embeddings},    {"layout", Stage::layout},        {"reduce", Stage::layout},
        {"labeling", Stage::labeling},   {"cluster", Stage::labeling},     {"topics", Stage::topics},
        {"represent", Stage::topics},    {"model", Stage::model},          {"label", Stage::model},
        {"coherence", Stage::coherence}, {"evaluate", Stage::coherence},   {"matches", Stage::matches},
        {"compare", Stage::matches},     {"viz", Stage::viz},              {"export-viz", Stage::viz}};
    const auto it = names.find(text);
    if (it == names.end()) throw Error(ErrorKind::Config, "unknown stage '" + std::string(text) + "'");
    return it->second;
}

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> stages{Stage::documents, Stage::embeddings, Stage::layout,
                                           Stage::labeling,  Stage::topics,     Stage::model,
                                           Stage::coherence, Stage::matches,    Stage::viz};
    return stages;
}

std::size_t RunReport::executed() const {
    return static_cast<std::size_t>(std::count_if(stages.begin(), stages.end(), [](const auto& s) { return !s.reused; }));
}

std::size_t RunReport::reused() const { return stages.size() - executed(); }

CorpusPaths corpus_paths(const PipelineConfig& config, const std::string& corpus_id) {
    return {config.output_dir / corpus_id};
}

fs::path matches_path(const PipelineConfig& config) { return config.output_dir / "matches.json"; }
fs::path manifest_path(const PipelineConfig& config) { return config.output_dir / "manifest.json"; }

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::InputFormat, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorKind::InputFormat, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::InputFormat, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_hash(const fs::path& path) {
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(path)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::string acc;
        for (const auto& f : files) acc += fs::relative(f, path).generic_string() + "=" + file_hash(f) + ";";
        return hex64(fnv1a64(acc));
    }
    if (!fs::exists(path)) return {};
    std::string h = hex64(fnv1a64(read_text(path)));
    auto sidecar = path;
    sidecar += ".json";
    if (fs::exists(sidecar)) h += hex64(fnv1a64(read_text(sidecar)));
    return h;
}

json topic_summary(const TopicModel& model) {
    json topics = json::array();
    for (const auto& t : model.state.topics) {
        json kw = json::array();
        for (const auto& k : t.keywords) kw.push_back(json{{"term", k.term}, {"weight", k.weight}});
        topics.push_back(json{{"topic_id", t.topic_id},
                              {"label", t.label},
                              {"label_source", t.to_json().at("label_source")},
                              {"size", t.size},
                              {"is_other", t.is_other},
                              {"keywords", kw}});
    }
    json j{{"model_id", model.model_id},
           {"corpus_id", model.corpus_id},
           {"version", model.version},
           {"n_docs", model.n_docs()},
           {"topic_count", model.topic_count(false)},
           {"topic_count_with_others", model.topic_count(true)},
           {"topics", topics}};
    j["coherence"] = model.state.coherence ? model.state.coherence->to_json() : json(nullptr);
    return j;
}

void export_viz(const TopicModel& model, const fs::path& dir) {
    const auto hierarchy = topic_hierarchy(model);
    const auto map = distance_map(model);
    write_text_atomic(dir / "dendrogram.json", hierarchy.to_json().dump(1) + "\n");
    write_text_atomic(dir / "distance_map.json", map.to_json().dump(1) + "\n");
    write_text_atomic(dir / "topics.json", topic_summary(model).dump(1) + "\n");
}

MatchReport compare_models(const fs::path& a, const fs::path& b, MatchBand band, const fs::path& out) {
    const auto ma = TopicModel::load(a);
    const auto mb = TopicModel::load(b);
    auto report = match_topics(ma, mb, band);
    if (!out.empty()) write_text_atomic(out, report.to_json().dump(1) + "\n");
    return report;
}

namespace {

/// Cached record of one produced artifact.
struct ManifestEntry {
    std::string content_hash;
    std::string config_hash;
};

class Manifest {
public:
    explicit Manifest(fs::path path) : path_(std::move(path)) {
        if (!fs::exists(path_)) return;
        try {
            doc_ = json::parse(read_text(path_));
        } catch (const json::exception&) {
            warn("manifest " + path_.string() + " is unreadable; rebuilding every stage");
            doc_ = json::object();
        }
    }

    std::optional<ManifestEntry> get(const std::string& key) const {
        if (!doc_.contains("artifacts") || !doc_["artifacts"].contains(key)) return std::nullopt;
        const auto& e = doc_["artifacts"][key];
        return ManifestEntry{e.value("content_hash", std::string()), e.value("config_hash", std::string())};
    }

    void put(const std::string& key, Stage stage, const std::string& corpus, const fs::path& artifact,
             const ManifestEntry& entry) {
        doc_["artifacts"][key] = json{{"stage", to_string(stage)},
                                      {"corpus_id", corpus},
                                      {"path", artifact.string()},
                                      {"content_hash", entry.content_hash},
                                      {"config_hash", entry.config_hash},
                                      {"completed_at", current_timestamp()}};
        doc_["updated_at"] = current_timestamp();
        write_text_atomic(path_, doc_.dump(1) + "\n");
    }

private:
    fs::path path_;
    json doc_ = json::object();
};

std::string hash_of(const json& parts) { return hex64(fnv1a64(parts.dump())); }

json topics_to_json(const std::vector<Topic>& topics) {
    json out = json::array();
    for (const auto& t : topics) out.push_back(t.to_json());
    return out;
}

std::vector<Topic> topics_from_json(const json& j) {
    std::vector<Topic> out;
    for (const auto& t : j) out.push_back(Topic::from_json(t));
    return out;
}

std::vector<Document> load_documents(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InputFormat, "cannot open " + path.string());
    return read_documents(in);
}

json load_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InputFormat, path.string() + ": " + e.what());
    }
}

class Runner {
public:
    Runner(const PipelineConfig& config, const RunOptions& options)
        : config_(config), options_(options), manifest_(manifest_path(config)) {}

    RunReport run() {
        fs::create_directories(config_.output_dir);
        for (const auto stage : all_stages()) {
            if (stage == Stage::matches) {
                run_matches();
            } else {
                for (const auto& corpus : config_.corpora) run_corpus_stage(stage, corpus);
            }
            if (options_.until && stage == *options_.until) break;
        }
        return report_;
    }

private:
    template <class Produce>
    void step(Stage stage, const std::string& corpus, const fs::path& artifact, const std::string& config_hash,
              Produce&& produce) {
        const std::string key = corpus.empty() ? std::string(to_string(stage)) : corpus + "/" + std::string(to_string(stage));
        StageReport r{stage, corpus, false, {}, config_hash};
        const auto cached = manifest_.get(key);
        if (!options_.force && cached && cached->config_hash == config_hash && fs::exists(artifact) &&
            file_hash(artifact) == cached->content_hash) {
            r.reused = true;
            r.content_hash = cached->content_hash;
        } else {
            try {
                produce();
            } catch (const Error& e) {
                std::string where = "stage '" + std::string(to_string(stage)) + "'";
                if (!corpus.empty()) where += " (corpus '" + corpus + "')";
                throw Error(e.kind(), where + ": " + e.what());
            }
            r.content_hash = file_hash(artifact);
            manifest_.put(key, stage, corpus, fs::relative(artifact, config_.output_dir), {r.content_hash, config_hash});
        }
        hashes_[key] = r.content_hash;
        if (options_.on_stage) options_.on_stage(r);
        report_.stages.push_back(r);
    }

    std::string upstream(const std::string& corpus, Stage stage) const {
        const auto it = hashes_.find(corpus + "/" + std::string(to_string(stage)));
        return it == hashes_.end() ? std::string() : it->second;
    }

    void run_corpus_stage(Stage stage, const CorpusSpec& corpus) {
        const auto paths = corpus_paths(config_, corpus.id);
        const auto& id = corpus.id;
        switch (stage) {
        case Stage::documents: {
            if (!fs::exists(corpus.path)) {
                throw Error(ErrorKind::Config, "corpus '" + id + "' input " + corpus.path.string() + " does not exist");
            }
            const auto h = hash_of({"documents", id, to_string(corpus.role), config_.preprocess.to_json(),
                                    file_hash(corpus.path)});
            step(stage, id, paths.documents(), h, [&] {
                std::ifstream in(corpus.path);
                if (!in) throw Error(ErrorKind::InputFormat, "cannot open " + corpus.path.string());
                const auto utterances = select_role(parse_transcripts(in, id), corpus.role);
                const auto docs = preprocess_corpus(utterances, config_.preprocess);
                if (docs.empty()) throw Error(ErrorKind::EmptyCorpus, "no documents left after preprocessing");
                std::ostringstream out;
                write_documents(out, docs);
                write_text_atomic(paths.documents(), out.str());
            });
            break;
        }
        case Stage::embeddings: {
            auto provider = config_.provider.to_json();
            provider["effective_endpoint"] = effective_endpoint(config_.provider).value_or("");
            if (config_.provider.kind == ProviderKind::file) provider["input_hash"] = file_hash(config_.provider.path);
            const auto h = hash_of({"embeddings", provider, upstream(id, Stage::documents)});
            step(stage, id, paths.embeddings(), h, [&] {
                const auto docs = load_documents(paths.documents());
                save_embedding_file(embed_documents(docs, config_.provider), paths.embeddings());
            });
            break;
        }
        case Stage::layout: {
            const auto h = hash_of({"layout", config_.umap.to_json(), upstream(id, Stage::embeddings)});
            step(stage, id, paths.layout(), h, [&] {
                const auto emb = load_embedding_file(paths.embeddings());
                save_layout(reduce(emb.to_matrix(), config_.umap), paths.layout());
            });
            break;
        }
        case Stage::labeling: {
            const auto h = hash_of({"labeling", config_.hdbscan.to_json(), upstream(id, Stage::layout)});
            step(stage, id, paths.labeling(), h, [&] {
                const auto layout = load_layout(paths.layout());
                const auto labeling = cluster(layout.coords, config_.hdbscan);
                write_text_atomic(paths.labeling(), labeling.to_json(config_.hdbscan).dump(1) + "\n");
            });
            break;
        }
        case Stage::topics: {
            const auto h = hash_of({"topics", config_.represent.to_json(), upstream(id, Stage::documents),
                                    upstream(id, Stage::embeddings), upstream(id, Stage::labeling)});
            step(stage, id, paths.topics(), h, [&] {
                const auto docs = load_documents(paths.documents());
                const auto emb = load_embedding_file(paths.embeddings());
                const auto labeling = ClusterLabeling::from_json(load_json(paths.labeling()));
                std::vector<std::string> texts;
                for (const auto& d : docs) texts.push_back(d.text);
                const auto rep = represent_topics(texts, labeling.labels, emb, config_.represent, true);
                write_text_atomic(paths.topics(), topics_to_json(rep.topics).dump(1) + "\n");
            });
            break;
        }
        case Stage::model: {
            const auto h = hash_of({"model", config_.llm ? config_.llm->to_json() : json(nullptr),
                                    config_.represent.to_json(), config_.coherence.to_json(),
                                    upstream(id, Stage::documents), upstream(id, Stage::embeddings),
                                    upstream(id, Stage::labeling), upstream(id, Stage::topics)});
            step(stage, id, paths.model(), h, [&] { build_model(paths); });
            break;
        }
        case Stage::coherence: {
            const auto h = hash_of({"coherence", config_.coherence.to_json(), upstream(id, Stage::model)});
            step(stage, id, paths.coherence(), h, [&] {
                const auto model = TopicModel::load(paths.model());
                json out{{"model_id", model.model_id},
                         {"topic_count", model.topic_count(false)},
                         {"topic_count_with_others", model.topic_count(true)}};
                if (model.non_other_topics().empty()) {
                    warn("corpus '" + id + "' has no topics; coherence is absent");
                    out["coherence"] = nullptr;
                } else {
                    out["coherence"] = model_coherence(model, config_.coherence).to_json();
                }
                write_text_atomic(paths.coherence(), out.dump(1) + "\n");
            });
            break;
        }
        case Stage::viz: {
            const auto h = hash_of({"viz", upstream(id, Stage::model)});
            step(stage, id, paths.viz(), h, [&] {
                const auto model = TopicModel::load(paths.model());
                fs::remove_all(paths.viz());
                if (model.non_other_topics().size() < 2) {
                    warn("corpus '" + id + "' has fewer than 2 topics; only the topic summary is exported");
                    write_text_atomic(paths.viz() / "topics.json", topic_summary(model).dump(1) + "\n");
                } else {
                    export_viz(model, paths.viz());
                }
            });
            break;
        }
        case Stage::matches: break;
        }
    }

    void build_model(const CorpusPaths& paths) {
        const auto docs = load_documents(paths.documents());
        auto emb = std::make_shared<const EmbeddingMatrix>(load_embedding_file(paths.embeddings()));
        const auto labeling = ClusterLabeling::from_json(load_json(paths.labeling()));
        TopicRepresentation rep;
        rep.topics = topics_from_json(load_json(paths.topics()));
        if (config_.llm) {
            for (auto& t : rep.topics) {
                if (t.is_other) continue;
                std::vector<std::size_t> members;
                for (std::size_t d = 0; d < labeling.labels.size(); ++d) {
                    if (labeling.labels[d] == t.topic_id) members.push_back(d);
                }
                std::vector<std::string> reps;
                for (auto d : representative_documents(*emb, members, t.centroid, config_.represent.representative_docs)) {
                    reps.push_back(docs[d].text);
                }
                std::vector<std::string> words;
                for (const auto& k : t.keywords) words.push_back(k.term);
                const auto label = llm_label(words, reps, config_.llm);
                t.label = label.text;
                t.label_source = label.source;
            }
        }
        auto model = assemble_model(docs, emb, labeling, rep, config_.represent, config_.coherence);
        model.embeddings_file = paths.embeddings().filename().string();
        model.save(paths.model());
    }

    void run_matches() {
        const auto& a = config_.corpora.front();
        const auto& b = config_.corpora.size() > 1 ? config_.corpora[1] : config_.corpora.front();
        const auto h = hash_of({"matches", config_.band.lo, config_.band.hi, upstream(a.id, Stage::model),
                                upstream(b.id, Stage::model)});
        step(Stage::matches, {}, matches_path(config_), h, [&] {
            compare_models(corpus_paths(config_, a.id).model(), corpus_paths(config_, b.id).model(), config_.band,
                           matches_path(config_));
        });
    }

    const PipelineConfig& config_;
    const RunOptions& options_;
    Manifest manifest_;
    std::map<std::string, std::string> hashes_;
    RunReport report_;
};

} // namespace

RunReport run_pipeline(const PipelineConfig& config, const RunOptions& options) {
    config.validate();
    return Runner(config, options).run();
}

} // namespace topicforge

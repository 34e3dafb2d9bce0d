#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/coherence.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/embedding.hpp"
#include "topicforge/hdbscan.hpp"
#include "topicforge/represent.hpp"

namespace topicforge {

struct CurationOp {
    enum class Kind { merge, rename, mark_other, undo };

    Kind kind = Kind::merge;
    std::vector<std::vector<int>> groups; ///< merge
    std::vector<int> topic_ids;           ///< mark_other
    int topic_id = 0;                     ///< rename
    std::string label;                    ///< rename
    std::string actor = "cli";
    std::string timestamp;

    static CurationOp merge(std::vector<std::vector<int>> groups, std::string actor = "cli");
    static CurationOp rename(int topic_id, std::string label, std::string actor = "cli");
    static CurationOp mark_other(std::vector<int> topic_ids, std::string actor = "cli");
    static CurationOp undo(std::string actor = "cli");

    nlohmann::json to_json() const;
    static CurationOp from_json(const nlohmann::json& j);
};

std::string_view to_string(CurationOp::Kind kind);

/// Everything derived from one partition of the documents.
struct ModelState {
    std::vector<int> assignments; ///< per document; kOthersTopicId for Others
    std::vector<Topic> topics;    ///< ascending id; Others (id -1) first when present
    Vocabulary vocabulary;
    CtfidfMatrix ctfidf;
    std::optional<CoherenceScore> coherence;

    nlohmann::json to_json() const;
    static ModelState from_json(const nlohmann::json& j);
};

struct ModelDocument {
    std::string doc_id;
    std::string text;
};

/// Immutable snapshot of a curated topic model. Curation operations return a new
/// snapshot with version + 1; the log replayed over `base` reproduces `state`.
class TopicModel {
public:
    std::string model_id;
    std::string corpus_id;
    std::string provider_tag;
    std::string embeddings_file; ///< optional, relative to the model file
    std::vector<ModelDocument> documents;
    RepresentParams represent_params;
    CoherenceParams coherence_params;
    ModelState base;
    ModelState state;
    std::vector<CurationOp> curation_log;
    std::uint64_t version = 0;
    std::shared_ptr<const EmbeddingMatrix> embeddings; ///< optional, not serialized

    std::size_t n_docs() const { return documents.size(); }
    const Topic* find_topic(int topic_id) const;
    const Topic* others() const { return find_topic(kOthersTopicId); }
    std::vector<const Topic*> non_other_topics() const;
    std::size_t topic_count(bool include_others) const;
    std::vector<std::size_t> members(int topic_id) const;
    std::vector<std::string> texts() const;

    nlohmann::json to_json() const;
    static TopicModel from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path) const;
    /// Loads the model and, when present next to it, its embedding file.
    static TopicModel load(const std::filesystem::path& path);
};

/// Builds version 0. Noise documents form the "Others" topic. Labels and centroids
/// come from `representation` when provided for a topic id.
TopicModel assemble_model(const std::vector<Document>& documents, std::shared_ptr<const EmbeddingMatrix> embeddings,
                          const ClusterLabeling& labeling, const TopicRepresentation& representation,
                          const RepresentParams& represent_params, const CoherenceParams& coherence_params);

TopicModel merge_topics(const TopicModel& model, const std::vector<std::vector<int>>& groups,
                        const std::string& actor = "cli");
TopicModel mark_other(const TopicModel& model, const std::vector<int>& topic_ids, const std::string& actor = "cli");
TopicModel rename_topic(const TopicModel& model, int topic_id, const std::string& label,
                        const std::string& actor = "cli");
TopicModel undo(const TopicModel& model, const std::string& actor = "cli");

/// Validates and applies any operation (timestamp stamped if empty).
TopicModel apply_op(const TopicModel& model, CurationOp op);

/// Rebuilds the state from `base` and the first `upto` log entries.
ModelState replay(const TopicModel& model, std::size_t upto);

std::string current_timestamp();

} // namespace topicforge

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/coherence.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/embedding.hpp"
#include "topicforge/evaluate.hpp"
#include "topicforge/hdbscan.hpp"
#include "topicforge/labeling.hpp"
#include "topicforge/model.hpp"
#include "topicforge/represent.hpp"
#include "topicforge/umap.hpp"

namespace topicforge {

struct CorpusSpec {
    std::string id;
    std::filesystem::path path;
    Role role = Role::therapist;
};

struct PipelineConfig {
    std::vector<CorpusSpec> corpora;
    PreprocessConfig preprocess = PreprocessConfig::defaults();
    ProviderConfig provider;
    UmapParams umap;
    HdbscanParams hdbscan;
    RepresentParams represent;
    std::optional<LlmClientConfig> llm;
    CoherenceParams coherence;
    MatchBand band;
    std::filesystem::path output_dir = "topicforge-out";
    std::uint64_t seed = 42;
    /// serve settings
    int port = 8080;
    std::string host = "127.0.0.1";
    std::filesystem::path static_dir;
    std::filesystem::path serve_model;   ///< defaults to the first corpus' model
    std::filesystem::path compare_model; ///< default "other" model for /api/matches

    /// Relative paths resolve against `base_dir`. The global seed overrides the
    /// per-section seeds.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    nlohmann::json to_json() const;
    void validate() const;
};

struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
    std::optional<int> port;
};

/// File, then TOPICFORGE_SEED / TOPICFORGE_OUTPUT_DIR / TOPICFORGE_PORT, then flags.
PipelineConfig load_config(const std::filesystem::path& path, const ConfigOverrides& flags = {});

enum class Stage { documents, embeddings, layout, labeling, topics, model, coherence, matches, viz };

std::string_view to_string(Stage stage);
/// Accepts artifact names and subcommand names (preprocess, embed, reduce, cluster,
/// represent, label, evaluate, export-viz).
Stage parse_stage(std::string_view text);
const std::vector<Stage>& all_stages();

struct StageReport {
    Stage stage = Stage::documents;
    std::string corpus_id; ///< empty for cross-corpus stages
    bool reused = false;
    std::string content_hash;
    std::string config_hash;
};

struct RunReport {
    std::vector<StageReport> stages;
    std::size_t executed() const;
    std::size_t reused() const;
};

struct RunOptions {
    std::optional<Stage> until; ///< run stages up to and including this one
    bool force = false;
    std::function<void(const StageReport&)> on_stage;
};

/// Runs the staged pipeline. Up-to-date artifacts (matching config hash and content
/// hash in the manifest) are reused; every stage reads its inputs back from disk.
RunReport run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

/// Artifact paths of one corpus inside the output directory.
struct CorpusPaths {
    std::filesystem::path dir;
    std::filesystem::path documents() const { return dir / "documents.jsonl"; }
    std::filesystem::path embeddings() const { return dir / "embeddings.bin"; }
    std::filesystem::path layout() const { return dir / "layout.bin"; }
    std::filesystem::path labeling() const { return dir / "labeling.json"; }
    std::filesystem::path topics() const { return dir / "topics.json"; }
    std::filesystem::path model() const { return dir / "model.json"; }
    std::filesystem::path coherence() const { return dir / "coherence.json"; }
    std::filesystem::path viz() const { return dir / "viz"; }
};

CorpusPaths corpus_paths(const PipelineConfig& config, const std::string& corpus_id);
std::filesystem::path matches_path(const PipelineConfig& config);
std::filesystem::path manifest_path(const PipelineConfig& config);

/// Writes dendrogram.json, distance_map.json and topics.json into `dir`.
/// Throws InsufficientData for fewer than 2 non-Other topics.
void export_viz(const TopicModel& model, const std::filesystem::path& dir);

/// topic summary used by the viz export and the service
nlohmann::json topic_summary(const TopicModel& model);

/// Loads both models, writes the report to `out` and returns it.
MatchReport compare_models(const std::filesystem::path& a, const std::filesystem::path& b, MatchBand band,
                           const std::filesystem::path& out);

void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);
std::string file_hash(const std::filesystem::path& path);

} // namespace topicforge

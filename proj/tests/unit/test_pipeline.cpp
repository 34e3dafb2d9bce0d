#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>

#include "support/pipeline_fixture.hpp"
#include "support/temp_dir.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/pipeline.hpp"

using namespace topicforge;
namespace fs = std::filesystem;

namespace {

std::map<std::string, bool> reuse_by_stage(const RunReport& r, const std::string& corpus = "") {
    std::map<std::string, bool> out;
    for (const auto& s : r.stages) {
        if (corpus.empty() || s.corpus_id == corpus || s.corpus_id.empty()) out[std::string(to_string(s.stage))] = s.reused;
    }
    return out;
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
    ~ScopedEnv() { ::unsetenv(name_); }

private:
    const char* name_;
};

} // namespace

TEST(Pipeline, FullRunThenCachedRerun) {
    testsupport::TempDir dir;
    const auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1, 2, 3, 4, 5}}});
    const auto config = load_config(cfg_path);
    const auto first = run_pipeline(config);
    EXPECT_EQ(first.executed(), 9u);
    const auto paths = corpus_paths(config, "syn");
    for (const auto& p : {paths.documents(), paths.embeddings(), paths.layout(), paths.labeling(), paths.topics(),
                          paths.model(), paths.coherence(), matches_path(config), manifest_path(config)}) {
        EXPECT_TRUE(fs::exists(p)) << p;
    }
    EXPECT_TRUE(fs::exists(paths.viz() / "dendrogram.json"));
    EXPECT_TRUE(fs::exists(paths.viz() / "distance_map.json"));
    const auto second = run_pipeline(config);
    EXPECT_EQ(second.executed(), 0u);
    EXPECT_EQ(second.reused(), 9u);
}

TEST(Pipeline, MinClusterSizeInvalidatesDownstreamOnly) {
    testsupport::TempDir dir;
    auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1, 2}}});
    run_pipeline(load_config(cfg_path));
    cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1, 2}}},
                                                   {{"hdbscan", {{"min_cluster_size", 25}}}});
    const auto r = reuse_by_stage(run_pipeline(load_config(cfg_path)));
    EXPECT_TRUE(r.at("documents"));
    EXPECT_TRUE(r.at("embeddings"));
    EXPECT_TRUE(r.at("layout"));
    EXPECT_FALSE(r.at("labeling"));
    EXPECT_FALSE(r.at("topics"));
    EXPECT_FALSE(r.at("model"));
}

TEST(Pipeline, DeletedArtifactResumes) {
    testsupport::TempDir dir;
    const auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1, 2}}});
    const auto config = load_config(cfg_path);
    run_pipeline(config);
    const auto paths = corpus_paths(config, "syn");
    const auto before = read_text(paths.labeling());
    fs::remove(paths.model());
    std::ofstream(paths.layout(), std::ios::app) << "x";
    const auto r = reuse_by_stage(run_pipeline(config));
    EXPECT_TRUE(r.at("embeddings"));
    EXPECT_FALSE(r.at("layout"));
    EXPECT_FALSE(r.at("model"));
    EXPECT_EQ(read_text(paths.labeling()), before);
}

TEST(Pipeline, DeterministicAcrossOutputDirs) {
    testsupport::TempDir dir;
    const auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1, 2}}});
    ConfigOverrides a, b;
    a.output_dir = dir.path() / "a";
    b.output_dir = dir.path() / "b";
    const auto ca = load_config(cfg_path, a);
    const auto cb = load_config(cfg_path, b);
    run_pipeline(ca);
    run_pipeline(cb);
    for (auto pick : {&CorpusPaths::embeddings, &CorpusPaths::layout, &CorpusPaths::labeling, &CorpusPaths::topics}) {
        EXPECT_EQ(file_hash((corpus_paths(ca, "syn").*pick)()), file_hash((corpus_paths(cb, "syn").*pick)()));
    }
}

TEST(Pipeline, StageLimit) {
    testsupport::TempDir dir;
    const auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0, 1}}});
    const auto config = load_config(cfg_path);
    RunOptions opts;
    opts.until = parse_stage("embed");
    const auto r = run_pipeline(config, opts);
    EXPECT_EQ(r.stages.size(), 2u);
    EXPECT_FALSE(fs::exists(corpus_paths(config, "syn").layout()));
    EXPECT_EQ(parse_stage("label"), Stage::model);
    EXPECT_EQ(parse_stage("labeling"), Stage::labeling);
    EXPECT_THROW(parse_stage("bogus"), Error);
}

TEST(Pipeline, SharedThemeMatchesAcrossCorpora) {
    testsupport::TempDir dir;
    const auto cfg_path =
        testsupport::write_pipeline_fixture(dir.path(), {{"left", {0, 1, 2}, 11}, {"right", {0, 3, 4}, 12}});
    const auto config = load_config(cfg_path);
    run_pipeline(config);
    const auto report = MatchReport::from_json(nlohmann::json::parse(read_text(matches_path(config))));
    ASSERT_EQ(report.matched.size(), 1u);
    EXPECT_GE(report.matched[0].cosine, 0.9);
}

TEST(ConfigLoading, Precedence) {
    testsupport::TempDir dir;
    const auto cfg_path = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0}}}, {{"seed", 5}});
    EXPECT_EQ(load_config(cfg_path).seed, 5u);
    EXPECT_EQ(load_config(cfg_path).umap.seed, 5u);
    EXPECT_EQ(load_config(cfg_path).output_dir, dir.path() / "out");
    {
        ScopedEnv e("TOPICFORGE_SEED", "9");
        EXPECT_EQ(load_config(cfg_path).seed, 9u);
        ConfigOverrides flags;
        flags.seed = 13;
        const auto c = load_config(cfg_path, flags);
        EXPECT_EQ(c.seed, 13u);
        EXPECT_EQ(c.provider.seed, 13u);
    }
    {
        ScopedEnv e("TOPICFORGE_PORT", "abc");
        try {
            load_config(cfg_path);
            FAIL();
        } catch (const Error& err) {
            EXPECT_EQ(err.kind(), ErrorKind::Config);
        }
    }
}

TEST(ConfigLoading, Errors) {
    testsupport::TempDir dir;
    EXPECT_THROW(load_config(dir.path() / "missing.json"), Error);
    std::ofstream(dir.path() / "bad.json") << "{not json";
    EXPECT_THROW(load_config(dir.path() / "bad.json"), Error);
    const auto cfg = testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0}}},
                                                         {{"umap", {{"n_neighbors", 1}}}});
    EXPECT_THROW(load_config(cfg), Error);
}

TEST(ConfigLoading, JsonRoundTrip) {
    testsupport::TempDir dir;
    const auto cfg = load_config(testsupport::write_pipeline_fixture(dir.path(), {{"syn", {0}}}));
    const auto again = PipelineConfig::from_json(cfg.to_json());
    EXPECT_EQ(again.to_json(), cfg.to_json());
}

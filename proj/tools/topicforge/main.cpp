#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/evaluate.hpp"
#include "topicforge/model.hpp"
#include "topicforge/pipeline.hpp"
#include "topicforge/service.hpp"

namespace fs = std::filesystem;
using namespace topicforge;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;

CurationServer* g_server = nullptr;

void on_signal(int) {
    if (g_server != nullptr) g_server->stop();
}

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-c,--config", flags.config, "pipeline config (JSON)")->required();
    cmd->add_option("--seed", flags.seed, "global seed for every stochastic stage");
    cmd->add_option("-o,--output-dir", flags.output, "output directory");
    cmd->add_flag("--force", flags.force, "rebuild stages even when up to date");
}

PipelineConfig load(const CommonFlags& flags, std::optional<int> port = std::nullopt) {
    ConfigOverrides o;
    o.seed = flags.seed;
    if (flags.output) o.output_dir = *flags.output;
    o.port = port;
    return load_config(flags.config, o);
}

int run_stages(const CommonFlags& flags, std::optional<Stage> until) {
    const auto config = load(flags);
    RunOptions options;
    options.until = until;
    options.force = flags.force;
    options.on_stage = [](const StageReport& r) {
        std::cout << (r.reused ? "up to date  " : "built       ") << to_string(r.stage);
        if (!r.corpus_id.empty()) std::cout << " [" << r.corpus_id << "]";
        std::cout << '\n';
    };
    const auto report = run_pipeline(config, options);
    std::cout << report.executed() << " stage(s) built, " << report.reused() << " up to date; artifacts in "
              << config.output_dir.string() << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"topicforge: topic modelling of dialogue transcripts with expert curation"};
    app.require_subcommand(1);

    CommonFlags common;
    std::optional<std::string> stage_name;

    struct StageCommand {
        const char* name;
        const char* help;
        Stage stage;
    };
    const StageCommand stage_commands[] = {
        {"preprocess", "segment and normalise transcripts into documents", Stage::documents},
        {"embed", "embed documents", Stage::embeddings},
        {"reduce", "UMAP reduction of the embeddings", Stage::layout},
        {"cluster", "HDBSCAN clustering of the layout", Stage::labeling},
        {"represent", "c-TF-IDF keywords per cluster", Stage::topics},
        {"label", "topic labels and model assembly", Stage::model},
        {"evaluate", "coherence scores and cross-corpus matches", Stage::matches},
    };
    std::vector<std::pair<CLI::App*, Stage>> stage_apps;
    for (const auto& sc : stage_commands) {
        auto* cmd = app.add_subcommand(sc.name, sc.help);
        add_common(cmd, common);
        stage_apps.emplace_back(cmd, sc.stage);
    }

    auto* run = app.add_subcommand("run", "run the pipeline (optionally up to --stage)");
    add_common(run, common);
    run->add_option("--stage", stage_name, "last stage to run (e.g. embed, cluster, model)");

    auto* viz = app.add_subcommand("export-viz", "write dendrogram, distance map and topic summary");
    std::string viz_model, viz_out;
    viz->add_option("-c,--config", common.config, "pipeline config; exports every corpus");
    viz->add_option("--seed", common.seed);
    viz->add_option("--model", viz_model, "export a single model file instead");
    viz->add_option("--out", viz_out, "output directory for --model (default: <model dir>/viz)");

    auto* compare = app.add_subcommand("compare", "match topics of two models by centroid cosine");
    std::string model_a, model_b, band_text = "0.9:1.0", compare_out;
    compare->add_option("A", model_a, "first model.json")->required();
    compare->add_option("B", model_b, "second model.json")->required();
    compare->add_option("--band", band_text, "cosine band lo:hi")->capture_default_str();
    compare->add_option("-o,--out", compare_out, "report path (default: matches.json next to A)");

    auto* serve = app.add_subcommand("serve", "serve the curation API and UI");
    std::optional<int> port;
    std::string serve_model, static_dir, host;
    serve->add_option("-c,--config", common.config, "pipeline config")->required();
    serve->add_option("--port", port, "listen port (0 picks one)");
    serve->add_option("--host", host, "listen address");
    serve->add_option("--model", serve_model, "model file (default: first corpus' model)");
    serve->add_option("--static", static_dir, "UI bundle directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        for (const auto& [cmd, stage] : stage_apps) {
            if (cmd->parsed()) return run_stages(common, stage);
        }
        if (run->parsed()) {
            return run_stages(common, stage_name ? std::optional<Stage>(parse_stage(*stage_name)) : std::nullopt);
        }
        if (viz->parsed()) {
            if (!viz_model.empty()) {
                const auto model = TopicModel::load(viz_model);
                const fs::path out = viz_out.empty() ? fs::path(viz_model).parent_path() / "viz" : fs::path(viz_out);
                export_viz(model, out);
                std::cout << "wrote " << out.string() << '\n';
                return kOk;
            }
            if (common.config.empty()) throw Error(ErrorKind::Config, "export-viz needs --config or --model");
            return run_stages(common, Stage::viz);
        }
        if (compare->parsed()) {
            const auto band = MatchBand::parse(band_text);
            const fs::path out = compare_out.empty() ? fs::path(model_a).parent_path() / "matches.json" : fs::path(compare_out);
            const auto report = compare_models(model_a, model_b, band, out);
            std::cout << format_match_table(report, TopicModel::load(model_a), TopicModel::load(model_b));
            std::cout << "report written to " << out.string() << '\n';
            return kOk;
        }
        if (serve->parsed()) {
            const auto config = load(common, port);
            fs::path model_path = serve_model.empty() ? config.serve_model : fs::path(serve_model);
            if (model_path.empty()) model_path = corpus_paths(config, config.corpora.front().id).model();
            ServerOptions options;
            options.host = host.empty() ? config.host : host;
            options.port = config.port;
            options.static_dir = static_dir.empty() ? config.static_dir : fs::path(static_dir);
            options.default_compare_model = config.compare_model;
            if (options.default_compare_model.empty() && config.corpora.size() > 1) {
                options.default_compare_model = corpus_paths(config, config.corpora[1].id).model();
            }
            CurationSession session(model_path);
            CurationServer server(session, options);
            const int bound = server.bind();
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving " << model_path.string() << " (version " << session.snapshot()->version
                      << ") on http://" << options.host << ":" << bound << std::endl;
            server.listen();
            g_server = nullptr;
            return kOk;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

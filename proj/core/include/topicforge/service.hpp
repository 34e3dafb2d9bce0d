#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "topicforge/errors.hpp"
#include "topicforge/model.hpp"

namespace topicforge {

/// Holds the current model snapshot and serialises curation writes. Accepted ops are
/// appended to a write-ahead log before the new snapshot is published.
class CurationSession {
public:
    CurationSession() = default;

    /// Loads `model_path` and replays `<model_path>.curation.jsonl` when it exists.
    explicit CurationSession(const std::filesystem::path& model_path);

    void load(const std::filesystem::path& model_path);
    bool loaded() const;

    /// Throws ModelNotLoaded when nothing is loaded.
    std::shared_ptr<const TopicModel> snapshot() const;

    /// Throws VersionConflict when expected_version is stale; the model is then unchanged.
    std::shared_ptr<const TopicModel> apply(const CurationOp& op, std::uint64_t expected_version);
    std::shared_ptr<const TopicModel> undo(std::uint64_t expected_version, const std::string& actor = "ui");

    const std::filesystem::path& model_path() const { return model_path_; }
    const std::filesystem::path& log_path() const { return log_path_; }

    static std::filesystem::path log_path_for(const std::filesystem::path& model_path);

private:
    void append_log(const CurationOp& op);

    std::filesystem::path model_path_;
    std::filesystem::path log_path_;
    mutable std::shared_mutex snapshot_mutex_;
    std::mutex writer_mutex_;
    std::shared_ptr<const TopicModel> current_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080; ///< 0 picks a free port
    std::filesystem::path static_dir;
    std::filesystem::path default_compare_model;
};

/// Snapshot summary sent by GET /api/model and the curation endpoints.
nlohmann::json model_summary(const TopicModel& model);

/// HTTP status for an error kind.
int http_status(ErrorKind kind);

class CurationServer {
public:
    CurationServer(CurationSession& session, ServerOptions options);
    ~CurationServer();

    CurationServer(const CurationServer&) = delete;
    CurationServer& operator=(const CurationServer&) = delete;

    /// Binds the socket; returns the bound port.
    int bind();
    /// Blocks until stop() is called. bind() must have succeeded.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace topicforge

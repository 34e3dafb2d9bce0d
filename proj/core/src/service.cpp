#include "topicforge/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>

#include "httplib.h"
#include "topicforge/evaluate.hpp"
#include "topicforge/hierarchy.hpp"
#include "topicforge/pipeline.hpp"

namespace topicforge {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path CurationSession::log_path_for(const fs::path& model_path) {
    auto p = model_path;
    p += ".curation.jsonl";
    return p;
}

CurationSession::CurationSession(const fs::path& model_path) { load(model_path); }

void CurationSession::load(const fs::path& model_path) {
    std::lock_guard writer(writer_mutex_);
    auto model = TopicModel::load(model_path);
    const auto log = log_path_for(model_path);
    auto write_header = [&] {
        std::ofstream out(log, std::ios::trunc);
        if (!out) throw Error(ErrorKind::InputFormat, "cannot create curation log " + log.string());
        out << json{{"model_id", model.model_id}, {"base_version", model.version}}.dump() << '\n';
    };
    if (fs::exists(log)) {
        std::ifstream in(log, std::ios::binary);
        std::string line;
        std::size_t lineno = 0;
        std::uintmax_t good_end = 0;
        bool header_seen = false;
        bool torn = false;
        while (std::getline(in, line)) {
            ++lineno;
            // an op is acknowledged only once its newline is on disk
            if (in.eof()) {
                torn = true;
                break;
            }
            if (!line.empty()) {
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::parse_error&) {
                    if (in.peek() == std::char_traits<char>::eof()) {
                        torn = true;
                        break;
                    }
                    throw Error(ErrorKind::InputFormat, log.string() + ":" + std::to_string(lineno) + ": malformed entry");
                }
                if (!header_seen) {
                    header_seen = true;
                    if (j.value("model_id", std::string()) != model.model_id ||
                        j.value("base_version", std::uint64_t{0}) != model.version) {
                        throw Error(ErrorKind::InputFormat,
                                    log.string() + " belongs to a different model or version; move it aside to start over");
                    }
                } else {
                    model = apply_op(model, CurationOp::from_json(j));
                }
            }
            good_end = static_cast<std::uintmax_t>(in.tellg());
        }
        in.close();
        if (torn) {
            warn(log.string() + ": ignoring incomplete last line");
            fs::resize_file(log, good_end);
        }
        if (!header_seen) write_header();
    } else {
        write_header();
    }
    auto snap = std::make_shared<const TopicModel>(std::move(model));
    std::unique_lock lock(snapshot_mutex_);
    model_path_ = model_path;
    log_path_ = log;
    current_ = std::move(snap);
}

bool CurationSession::loaded() const {
    std::shared_lock lock(snapshot_mutex_);
    return current_ != nullptr;
}

std::shared_ptr<const TopicModel> CurationSession::snapshot() const {
    std::shared_lock lock(snapshot_mutex_);
    if (!current_) throw Error(ErrorKind::ModelNotLoaded, "no model loaded");
    return current_;
}

void CurationSession::append_log(const CurationOp& op) {
    const std::string line = op.to_json().dump() + "\n";
    const int fd = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw Error(ErrorKind::InputFormat, "cannot open curation log " + log_path_.string());
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(fd, line.data() + written, line.size() - written);
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorKind::InputFormat, "write to curation log failed");
        }
        written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
}

std::shared_ptr<const TopicModel> CurationSession::apply(const CurationOp& op, std::uint64_t expected_version) {
    std::lock_guard writer(writer_mutex_);
    const auto current = snapshot();
    if (current->version != expected_version) {
        throw Error(ErrorKind::VersionConflict, "expected version " + std::to_string(expected_version) +
                                                    " but the model is at " + std::to_string(current->version));
    }
    CurationOp stamped = op;
    if (stamped.timestamp.empty()) stamped.timestamp = current_timestamp();
    auto next = std::make_shared<const TopicModel>(apply_op(*current, stamped));
    append_log(next->curation_log.back());
    std::unique_lock lock(snapshot_mutex_);
    current_ = next;
    return next;
}

std::shared_ptr<const TopicModel> CurationSession::undo(std::uint64_t expected_version, const std::string& actor) {
    return apply(CurationOp::undo(actor), expected_version);
}

json model_summary(const TopicModel& model) {
    auto j = topic_summary(model);
    j["curation_log"] = json::array();
    for (const auto& op : model.curation_log) j["curation_log"].push_back(op.to_json());
    return j;
}

int http_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::VersionConflict: return 409;
    case ErrorKind::UnknownTopicId: return 404;
    case ErrorKind::ModelNotLoaded: return 503;
    case ErrorKind::InputFormat:
    case ErrorKind::Config: return 400;
    case ErrorKind::InvalidCuration:
    case ErrorKind::OverlappingGroups:
    case ErrorKind::NothingToUndo:
    case ErrorKind::InsufficientData:
    case ErrorKind::DimensionMismatch: return 422;
    default: return 500;
    }
}

struct CurationServer::Impl {
    CurationSession& session;
    ServerOptions options;
    httplib::Server server;
    int port = 0;

    Impl(CurationSession& s, ServerOptions o) : session(s), options(std::move(o)) {}

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    std::uint64_t current_version() const {
        try {
            return session.snapshot()->version;
        } catch (const Error&) {
            return 0;
        }
    }

    void send_error(httplib::Response& res, const Error& e) {
        send(res, http_status(e.kind()),
             json{{"error", to_string(e.kind())}, {"message", e.what()}, {"version", current_version()}});
    }

    template <class F>
    httplib::Server::Handler guarded(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e);
            } catch (const json::exception& e) {
                send(res, 400, json{{"error", "InputFormat"}, {"message", e.what()}, {"version", current_version()}});
            } catch (const std::exception& e) {
                send(res, 500, json{{"error", "Internal"}, {"message", e.what()}, {"version", current_version()}});
            }
        };
    }

    static json parse_body(const httplib::Request& req) {
        try {
            auto j = json::parse(req.body);
            if (!j.is_object()) throw Error(ErrorKind::InputFormat, "request body must be a JSON object");
            return j;
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::InputFormat, std::string("request body is not JSON: ") + e.what());
        }
    }

    static std::uint64_t expected_version(const json& body) {
        if (!body.contains("expected_version") || !body.at("expected_version").is_number_unsigned()) {
            throw Error(ErrorKind::InputFormat, "expected_version (non-negative integer) is required");
        }
        return body.at("expected_version").get<std::uint64_t>();
    }

    static double query_double(const httplib::Request& req, const char* key, double fallback) {
        if (!req.has_param(key)) return fallback;
        try {
            return std::stod(req.get_param_value(key));
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::InputFormat, std::string("query parameter ") + key + " must be a number");
        }
    }

    void routes() {
        server.Get("/api/model", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send(res, 200, model_summary(*session.snapshot()));
                   }));

        server.Get(R"(/api/topics/(-?\d+)/documents)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto model = session.snapshot();
                       const int id = std::stoi(req.matches[1]);
                       const auto* topic = model->find_topic(id);
                       if (topic == nullptr) throw Error(ErrorKind::UnknownTopicId, "topic " + std::to_string(id));
                       std::size_t limit = model->represent_params.representative_docs;
                       if (req.has_param("limit")) {
                           const double l = query_double(req, "limit", 0);
                           if (l < 0) throw Error(ErrorKind::InputFormat, "limit must be non-negative");
                           limit = static_cast<std::size_t>(l);
                       }
                       const auto members = model->members(id);
                       std::vector<std::size_t> picked;
                       if (model->embeddings && !topic->centroid.empty()) {
                           picked = representative_documents(*model->embeddings, members, topic->centroid, limit);
                       } else {
                           picked.assign(members.begin(), members.begin() + std::min(limit, members.size()));
                       }
                       json docs = json::array();
                       for (auto d : picked) {
                           docs.push_back(json{{"doc_id", model->documents[d].doc_id}, {"text", model->documents[d].text}});
                       }
                       send(res, 200, json{{"version", model->version}, {"topic_id", id}, {"documents", docs}});
                   }));

        server.Get("/api/hierarchy", guarded([this](const httplib::Request&, httplib::Response& res) {
                       const auto model = session.snapshot();
                       send(res, 200, json{{"version", model->version}, {"hierarchy", topic_hierarchy(*model).to_json()}});
                   }));

        server.Get("/api/distance-map", guarded([this](const httplib::Request&, httplib::Response& res) {
                       const auto model = session.snapshot();
                       send(res, 200, json{{"version", model->version}, {"distance_map", distance_map(*model).to_json()}});
                   }));

        server.Get("/api/matches", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto model = session.snapshot();
                       fs::path other = req.has_param("other") ? fs::path(req.get_param_value("other"))
                                                               : options.default_compare_model;
                       MatchBand band;
                       band.lo = query_double(req, "lo", band.lo);
                       band.hi = query_double(req, "hi", band.hi);
                       if (!(band.lo <= band.hi)) throw Error(ErrorKind::InputFormat, "lo must not exceed hi");
                       const auto report =
                           other.empty() ? match_topics(*model, *model, band) : match_topics(*model, TopicModel::load(other), band);
                       send(res, 200, json{{"version", model->version}, {"report", report.to_json()}});
                   }));

        server.Post("/api/curation", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto expected = expected_version(body);
                        if (!body.contains("op")) throw Error(ErrorKind::InputFormat, "op is required");
                        auto op_json = body.at("op");
                        if (!op_json.contains("actor")) op_json["actor"] = "ui";
                        op_json.erase("timestamp");
                        const auto before = session.snapshot();
                        respond_with_change(res, before, session.apply(CurationOp::from_json(op_json), expected));
                    }));

        server.Post("/api/undo", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto expected = expected_version(body);
                        const auto before = session.snapshot();
                        respond_with_change(res, before, session.undo(expected, body.value("actor", std::string("ui"))));
                    }));

        if (!options.static_dir.empty() && fs::is_directory(options.static_dir)) {
            server.set_mount_point("/", options.static_dir.string());
        } else {
            server.Get("/", [](const httplib::Request&, httplib::Response& res) {
                res.set_content("topicforge curation service; the UI bundle is not installed\n", "text/plain");
            });
        }
    }

    void respond_with_change(httplib::Response& res, const std::shared_ptr<const TopicModel>& before,
                             const std::shared_ptr<const TopicModel>& next) {
        auto body = model_summary(*next);
        const auto& prev = before->state.coherence;
        const bool both = prev.has_value() && next->state.coherence.has_value() && before->version + 1 == next->version;
        body["previous_version"] = before->version;
        body["coherence_delta"] = both ? json(next->state.coherence->mean - prev->mean) : json(nullptr);
        send(res, 200, body);
    }
};

CurationServer::CurationServer(CurationSession& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {
    impl_->routes();
}

CurationServer::~CurationServer() { stop(); }

int CurationServer::bind() {
    if (impl_->options.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
    } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
        impl_->port = impl_->options.port;
    } else {
        impl_->port = -1;
    }
    if (impl_->port <= 0) {
        throw Error(ErrorKind::Config, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    }
    return impl_->port;
}

void CurationServer::listen() { impl_->server.listen_after_bind(); }

void CurationServer::stop() {
    if (impl_) impl_->server.stop();
}

} // namespace topicforge

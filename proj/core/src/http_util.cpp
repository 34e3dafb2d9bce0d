#include "http_util.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

#include "topicforge/errors.hpp"

namespace topicforge::detail {

using nlohmann::json;

ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::Config, "endpoint '" + url + "' is not an absolute http URL");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http") {
        throw Error(ErrorKind::Config, "unsupported endpoint scheme '" + scheme + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const std::string& url, const json& body, double timeout_seconds, int retries,
               int backoff_ms) {
    const auto target = parse_url(url);
    const auto payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms * attempt));
        }
        httplib::Client client(target.origin);
        const auto timeout = std::chrono::duration<double>(timeout_seconds);
        client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        auto res = client.Post(target.path, payload, "application/json");
        if (!res) {
            last_error = "request to " + url + " failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = url + " returned HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorKind::ProviderUnavailable, url + " returned HTTP " + std::to_string(res->status));
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::ProviderUnavailable, url + " returned malformed JSON: " + e.what());
        }
    }
    throw Error(ErrorKind::ProviderUnavailable, last_error + " (after " + std::to_string(retries) + " retries)");
}

} // namespace topicforge::detail

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace topicforge::detail {

struct ParsedUrl {
    std::string origin; ///< scheme://host[:port]
    std::string path;   ///< starts with '/'
};

ParsedUrl parse_url(const std::string& url);

/// POSTs a JSON body; connection failures, 429 and 5xx are retried `retries`
/// times. Throws ProviderUnavailable when attempts are exhausted or on any other
/// non-2xx status.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_seconds,
                         int retries, int backoff_ms);

} // namespace topicforge::detail

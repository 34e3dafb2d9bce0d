#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/represent.hpp"

namespace topicforge {

/// Labeling prompt; identical to assets/label_prompt.txt.
extern const std::string_view kLabelPromptTemplate;

/// Chat-completion service: POST {model, messages[], temperature} -> {text}.
struct LlmClientConfig {
    std::string endpoint;
    std::string model = "gpt-3.5-turbo";
    double timeout_seconds = 60.0;
    int retries = 3;
    int retry_backoff_ms = 500;

    nlohmann::json to_json() const;
    static LlmClientConfig from_json(const nlohmann::json& j);
};

/// Fills [DOCUMENTS] with "- <doc>" lines and [KEYWORDS] with a comma-separated list.
std::string render_label_prompt(const std::vector<std::string>& keywords, const std::vector<std::string>& documents);

/// Text after the last "topic:" marker (case-insensitive) on its line, cut to 5 words.
std::string parse_label_response(std::string_view response);

/// First five whitespace-separated words.
std::string truncate_words(std::string_view text, std::size_t max_words = 5);

/// Top three keywords joined by "/".
std::string fallback_label(const std::vector<Keyword>& keywords);
std::string fallback_label(const std::vector<std::string>& keywords);

struct TopicLabel {
    std::string text;
    LabelSource source = LabelSource::keywords;
};

/// Asks the configured model for a label; without a client, or once retries are
/// exhausted (a warning is emitted), returns the keyword fallback.
TopicLabel llm_label(const std::vector<std::string>& keywords, const std::vector<std::string>& representative_docs,
                     const std::optional<LlmClientConfig>& client);

} // namespace topicforge

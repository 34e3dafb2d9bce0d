#include "topicforge/labeling.hpp"

#include <sstream>

#include "http_util.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/text.hpp"

namespace topicforge {

using nlohmann::json;

const std::string_view kLabelPromptTemplate =
    "I have a topic that contains the following documents:\n"
    "[DOCUMENTS]\n"
    "The topic is described by the following keywords:\n"
    "[KEYWORDS]\n"
    "Based on the information above, extract a short but highly\n"
    "descriptive topic label of at most 5 words. Make sure it is in\n"
    "the following format:\n"
    "topic: <topic label>\n"
    "Topic must be in the language in which the documents are\n"
    "written\n";

json LlmClientConfig::to_json() const {
    return json{{"endpoint", endpoint}, {"model", model}, {"timeout", timeout_seconds}, {"retries", retries}};
}

LlmClientConfig LlmClientConfig::from_json(const json& j) {
    LlmClientConfig c;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.value("model", c.model);
    c.timeout_seconds = j.value("timeout", c.timeout_seconds);
    c.retries = j.value("retries", c.retries);
    c.retry_backoff_ms = j.value("retry_backoff_ms", c.retry_backoff_ms);
    return c;
}

namespace {

void replace_once(std::string& text, std::string_view placeholder, const std::string& value) {
    const auto pos = text.find(placeholder);
    if (pos != std::string::npos) text.replace(pos, placeholder.size(), value);
}

} // namespace

std::string render_label_prompt(const std::vector<std::string>& keywords, const std::vector<std::string>& documents) {
    std::string docs;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i != 0) docs += '\n';
        docs += "- " + documents[i];
    }
    std::string kws;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (i != 0) kws += ", ";
        kws += keywords[i];
    }
    std::string prompt(kLabelPromptTemplate);
    replace_once(prompt, "[DOCUMENTS]", docs);
    replace_once(prompt, "[KEYWORDS]", kws);
    return prompt;
}

std::string truncate_words(std::string_view text, std::size_t max_words) {
    std::istringstream in{std::string(text)};
    std::string word;
    std::string out;
    for (std::size_t n = 0; n < max_words && in >> word; ++n) {
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

std::string parse_label_response(std::string_view response) {
    const std::string lower = to_lower_utf8(response);
    std::string_view label = response;
    if (const auto pos = lower.rfind("topic:"); pos != std::string::npos) {
        label = response.substr(pos + 6);
        if (const auto eol = label.find('\n'); eol != std::string_view::npos) label = label.substr(0, eol);
    }
    std::string cleaned(trim(label));
    if (cleaned.size() >= 2 && cleaned.front() == '<' && cleaned.back() == '>') {
        cleaned = cleaned.substr(1, cleaned.size() - 2);
    }
    while (!cleaned.empty() && (cleaned.front() == '"' || cleaned.front() == '\'')) cleaned.erase(cleaned.begin());
    while (!cleaned.empty() && (cleaned.back() == '"' || cleaned.back() == '\'')) cleaned.pop_back();
    return truncate_words(cleaned, 5);
}

std::string fallback_label(const std::vector<std::string>& keywords) {
    std::string out;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, keywords.size()); ++i) {
        if (i != 0) out += '/';
        out += keywords[i];
    }
    return out;
}

std::string fallback_label(const std::vector<Keyword>& keywords) {
    std::vector<std::string> terms;
    for (const auto& k : keywords) terms.push_back(k.term);
    return fallback_label(terms);
}

TopicLabel llm_label(const std::vector<std::string>& keywords, const std::vector<std::string>& representative_docs,
                     const std::optional<LlmClientConfig>& client) {
    if (keywords.empty()) throw Error(ErrorKind::InsufficientData, "llm_label needs at least one keyword");
    if (!client) return {fallback_label(keywords), LabelSource::keywords};
    std::vector<std::string> top(keywords.begin(), keywords.begin() + std::min<std::ptrdiff_t>(10, keywords.size()));
    std::vector<std::string> docs(representative_docs.begin(),
                                  representative_docs.begin() + std::min<std::ptrdiff_t>(4, representative_docs.size()));
    const json request{{"model", client->model},
                       {"temperature", 0},
                       {"messages", json::array({json{{"role", "user"}, {"content", render_label_prompt(top, docs)}}})}};
    try {
        const json response =
            detail::post_json(client->endpoint, request, client->timeout_seconds, client->retries, client->retry_backoff_ms);
        if (!response.is_object() || !response.contains("text") || !response.at("text").is_string()) {
            throw Error(ErrorKind::ProviderUnavailable, "label service response lacks \"text\"");
        }
        auto label = parse_label_response(response.at("text").get<std::string>());
        if (label.empty()) throw Error(ErrorKind::ProviderUnavailable, "label service returned an empty label");
        return {std::move(label), LabelSource::llm};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ProviderUnavailable) throw;
        warn(std::string("topic labeling fell back to keywords: ") + e.what());
        return {fallback_label(keywords), LabelSource::keywords};
    }
}

} // namespace topicforge

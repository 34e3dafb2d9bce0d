#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support/mock_server.hpp"
#include "support/warnings.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/labeling.hpp"

using namespace topicforge;

TEST(Labeling, FallbackWithoutClient) {
    const auto l = llm_label({"fear", "afraid", "risk", "danger"}, {}, std::nullopt);
    EXPECT_EQ(l.text, "fear/afraid/risk");
    EXPECT_EQ(l.source, LabelSource::keywords);
}

TEST(Labeling, TruncateToFiveWords) {
    EXPECT_EQ(truncate_words("one two three four five six seven eight"), "one two three four five");
    EXPECT_EQ(truncate_words("  a   b "), "a b");
}

TEST(Labeling, ParseResponse) {
    EXPECT_EQ(parse_label_response("topic: <Fear of relapse>"), "Fear of relapse");
    EXPECT_EQ(parse_label_response("Sure.\nTopic: Sleep and rest routines at night now\n"), "Sleep and rest routines at");
    EXPECT_EQ(parse_label_response("Family ties"), "Family ties");
}

TEST(Labeling, PromptFilled) {
    const auto p = render_label_prompt({"sleep", "night"}, {"I slept badly.", "Nights are long."});
    EXPECT_NE(p.find("- I slept badly."), std::string::npos);
    EXPECT_NE(p.find("sleep, night"), std::string::npos);
    EXPECT_EQ(p.find("[DOCUMENTS]"), std::string::npos);
    EXPECT_EQ(p.find("[KEYWORDS]"), std::string::npos);
}

TEST(Labeling, PromptAssetMatchesEmbeddedTemplate) {
    std::ifstream in(TOPICFORGE_PROMPT_ASSET);
    ASSERT_TRUE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), std::string(kLabelPromptTemplate));
}

TEST(Labeling, UsesClientAndTruncates) {
    testsupport::MockServer mock;
    nlohmann::json seen;
    mock.server().Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(R"({"text":"topic: Ways of coping with stress at work"})", "application/json");
    });
    mock.start();
    LlmClientConfig c;
    c.endpoint = mock.url("/chat");
    const auto l = llm_label({"stress", "work"}, {"d1", "d2", "d3", "d4", "d5"}, c);
    EXPECT_EQ(l.text, "Ways of coping with stress");
    EXPECT_EQ(l.source, LabelSource::llm);
    EXPECT_EQ(seen.at("temperature"), 0);
    const auto content = seen.at("messages").at(0).at("content").get<std::string>();
    EXPECT_NE(content.find("- d4"), std::string::npos);
    EXPECT_EQ(content.find("- d5"), std::string::npos);
}

TEST(Labeling, FallsBackAfterRetries) {
    testsupport::MockServer mock;
    std::atomic<int> calls{0};
    mock.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 503;
    });
    mock.start();
    LlmClientConfig c;
    c.endpoint = mock.url("/chat");
    c.retry_backoff_ms = 1;
    testsupport::CaptureWarnings warnings;
    const auto l = llm_label({"a", "b", "c"}, {}, c);
    EXPECT_EQ(l.text, "a/b/c");
    EXPECT_EQ(l.source, LabelSource::keywords);
    EXPECT_EQ(calls.load(), 4);
    EXPECT_EQ(warnings.count(), 1u);
}

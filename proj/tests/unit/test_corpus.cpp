#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>

#include "support/warnings.hpp"
#include "topicforge/corpus.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/text.hpp"

using namespace topicforge;

namespace {

std::vector<Utterance> parse(const std::string& text, const std::string& corpus = "c") {
    std::istringstream in(text);
    return parse_transcripts(in, corpus);
}

std::string no_space(std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
}

} // namespace

TEST(ParseTranscripts, SingleLine) {
    const auto u = parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"I see."})" "\n");
    ASSERT_EQ(u.size(), 1u);
    EXPECT_EQ(u[0].index, 0u);
    EXPECT_EQ(u[0].role, Role::therapist);
    EXPECT_EQ(u[0].text, "I see.");
    EXPECT_EQ(u[0].corpus_id, "c");
    EXPECT_FALSE(u[0].t_start.has_value());
}

TEST(ParseTranscripts, IndicesPerSession) {
    const auto u = parse(R"({"session_id":"a","speaker":"T","role":"therapist","text":"one","t_start":1.5}
{"session_id":"b","speaker":"T","role":"therapist","text":"two"}

{"session_id":"a","speaker":"C","role":"client","text":"three"}
)");
    ASSERT_EQ(u.size(), 3u);
    EXPECT_EQ(u[0].index, 0u);
    EXPECT_EQ(u[1].index, 0u);
    EXPECT_EQ(u[2].index, 1u);
    EXPECT_DOUBLE_EQ(*u[0].t_start, 1.5);
}

TEST(ParseTranscripts, EmptyStream) {
    try {
        parse("");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyCorpus);
    }
}

TEST(ParseTranscripts, MissingTextReportsLine) {
    try {
        parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"ok"}
{"session_id":"s1","speaker":"T","role":"therapist"}
)");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InputFormat);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ParseTranscripts, MalformedJsonAndBadRole) {
    EXPECT_THROW(parse("{not json}\n"), Error);
    EXPECT_THROW(parse(R"({"session_id":"s","speaker":"T","role":"doctor","text":"x"})" "\n"), Error);
    EXPECT_THROW(parse(R"({"session_id":"s","speaker":"T","role":"therapist","text":"   "})" "\n"), Error);
}

TEST(SelectRole, FiltersAndPreservesOrder) {
    const auto u = parse(R"({"session_id":"s","speaker":"T","role":"therapist","text":"a"}
{"session_id":"s","speaker":"C","role":"client","text":"b"}
{"session_id":"s","speaker":"T","role":"therapist","text":"c"}
)");
    const auto t = select_role(u, Role::therapist);
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[0].text, "a");
    EXPECT_EQ(t[1].text, "c");
    const auto again = select_role(t, Role::therapist);
    ASSERT_EQ(again.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(again[i].text, t[i].text);
}

TEST(SelectRole, EmptyResultWarns) {
    testsupport::CaptureWarnings warnings;
    const auto u = parse(R"({"session_id":"s","speaker":"C","role":"client","text":"b"})" "\n");
    EXPECT_TRUE(select_role(u, Role::therapist).empty());
    EXPECT_EQ(warnings.count(), 1u);
}

TEST(SegmentSentences, SplitsOnTerminators) {
    const auto cfg = PreprocessConfig::defaults();
    EXPECT_EQ(segment_sentences("I see. Let's look at that.", cfg),
              (std::vector<std::string>{"I see.", "Let's look at that."}));
    EXPECT_EQ(segment_sentences("Shall we make it next week at the same time?", cfg),
              (std::vector<std::string>{"Shall we make it next week at the same time?"}));
    EXPECT_TRUE(segment_sentences("", cfg).empty());
    EXPECT_EQ(segment_sentences("Really?! Yes... fine", cfg).size(), 3u);
}

TEST(SegmentSentences, AbbreviationExceptions) {
    const auto cfg = PreprocessConfig::defaults();
    EXPECT_EQ(segment_sentences("I talked to Dr. Smith today. He agreed.", cfg),
              (std::vector<std::string>{"I talked to Dr. Smith today.", "He agreed."}));
}

TEST(SegmentSentences, CharacterConservation) {
    const auto cfg = PreprocessConfig::defaults();
    const std::vector<std::string> inputs{"One. Two! Three? Four", "  e.g. this   is  fine.Next one. ",
                                          "(0.5) hm. Q1: ok.", "No terminator at all", "...", "a.b.c. d"};
    for (const auto& in : inputs) {
        std::string joined;
        for (const auto& s : segment_sentences(in, cfg)) joined += s + " ";
        EXPECT_EQ(no_space(joined), no_space(in)) << in;
    }
}

TEST(NormalizeLexical, Contractions) {
    const auto cfg = PreprocessConfig::defaults();
    EXPECT_EQ(normalize_lexical("don't", cfg), "do not");
    EXPECT_EQ(normalize_lexical("I won't go, you're sure?", cfg), "I will not go, you are sure?");
    EXPECT_EQ(normalize_lexical("Don't", cfg), "Do not");
}

TEST(NormalizeLexical, FillersAndOrthography) {
    const auto cfg = PreprocessConfig::defaults();
    EXPECT_EQ(normalize_lexical("Uhm-hm yes", cfg), "yes");
    EXPECT_EQ(normalize_lexical("ok", cfg), "okay");
    EXPECT_EQ(normalize_lexical("Mhm, um, I  see", cfg), "I see");
    EXPECT_EQ(normalize_lexical("okey then", cfg), "okay then");
}

TEST(StripMetadata, PausesAndIdentifiers) {
    const auto cfg = PreprocessConfig::defaults();
    EXPECT_EQ(strip_metadata("(0.5) you feel hurt", cfg), "you feel hurt");
    EXPECT_EQ(strip_metadata("Q12: tell me more", cfg), "tell me more");
    EXPECT_EQ(strip_metadata("you feel hurt", cfg), "you feel hurt");
    EXPECT_EQ(strip_metadata("you [pause] feel (2) hurt", cfg), "you feel hurt");
}

TEST(PreprocessCorpus, HandTrace) {
    const auto u = parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"I see. (0.5) OK."})" "\n");
    const auto docs = preprocess_corpus(u, PreprocessConfig::defaults());
    ASSERT_EQ(docs.size(), 2u);
    EXPECT_EQ(docs[0].text, "i see.");
    EXPECT_EQ(docs[1].text, "okay.");
    EXPECT_EQ(docs[0].doc_id, make_doc_id("c", "s1", 0, 0));
    EXPECT_EQ(docs[1].sentence_ordinal, 1u);
}

TEST(PreprocessCorpus, FillerOnlyUtteranceDropped) {
    const auto u = parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"Mhm."}
{"session_id":"s1","speaker":"T","role":"therapist","text":"Go on."}
)");
    const auto docs = preprocess_corpus(u, PreprocessConfig::defaults());
    ASSERT_EQ(docs.size(), 1u);
    EXPECT_EQ(docs[0].text, "go on.");
    EXPECT_EQ(docs[0].utterance_index, 1u);
}

TEST(PreprocessCorpus, NothingSurvives) {
    const auto u = parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"Mhm. Uh."})" "\n");
    try {
        preprocess_corpus(u, PreprocessConfig::defaults());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyCorpus);
    }
}

TEST(PreprocessCorpus, DeterministicLowercaseAndClean) {
    const std::string text = R"({"session_id":"s1","speaker":"T","role":"therapist","text":"Q3: I DON'T know. (1.25) Maybe Dr. Who knows?"}
{"session_id":"s2","speaker":"T","role":"therapist","text":"Ça va. ПРИВЕТ мир!"}
)";
    const auto cfg = PreprocessConfig::defaults();
    const auto a = preprocess_corpus(parse(text), cfg);
    const auto b = preprocess_corpus(parse(text), cfg);
    EXPECT_EQ(a, b);
    for (const auto& d : a) {
        EXPECT_EQ(d.text.find("("), std::string::npos);
        EXPECT_EQ(d.text.find("Q3"), std::string::npos);
        std::string lower = d.text;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        EXPECT_EQ(lower, d.text);
    }
    EXPECT_EQ(a[0].text, "i do not know.");
    EXPECT_EQ(a.back().text, "привет мир!");
}

TEST(PreprocessCorpus, StripThenNormalizeMatchesPipeline) {
    const auto cfg = PreprocessConfig::defaults();
    const std::vector<std::string> sentences{"(0.5) I don't know.", "Q1: ok, mhm, we can't.", "[pause] Uh fine."};
    for (const auto& s : sentences) {
        Utterance u;
        u.corpus_id = "c";
        u.session_id = "s";
        u.role = Role::therapist;
        u.text = s;
        const auto docs = preprocess_corpus({u}, cfg);
        ASSERT_EQ(docs.size(), 1u) << s;
        EXPECT_EQ(docs[0].text, to_lower_utf8(collapse_spaces(trim(normalize_lexical(strip_metadata(s, cfg), cfg)))));
    }
}

TEST(Documents, JsonLinesRoundTrip) {
    const auto u = parse(R"({"session_id":"s1","speaker":"T","role":"therapist","text":"I see. Go on."})" "\n");
    const auto docs = preprocess_corpus(u, PreprocessConfig::defaults());
    std::stringstream buf;
    write_documents(buf, docs);
    EXPECT_EQ(read_documents(buf), docs);
}

TEST(PreprocessConfigJson, RoundTripAndBadPattern) {
    const auto cfg = PreprocessConfig::defaults();
    const auto back = PreprocessConfig::from_json(cfg.to_json());
    EXPECT_EQ(back.to_json(), cfg.to_json());
    auto j = cfg.to_json();
    j["pause_mark_patterns"] = {"(unclosed"};
    try {
        PreprocessConfig::from_json(j).validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
}

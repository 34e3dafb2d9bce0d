#include <gtest/gtest.h>

#include <cmath>

#include "topicforge/coherence.hpp"
#include "topicforge/errors.hpp"

using namespace topicforge;

TEST(UMass, HandValues) {
    const std::vector<std::string> docs{"w1 w2", "w1 x"};
    CoherenceCorpus corpus(docs);
    EXPECT_DOUBLE_EQ(umass_coherence({"w1", "w2"}, corpus), 0.0);
    const std::vector<std::string> together{"p q", "p q", "p q"};
    CoherenceCorpus c2(together);
    EXPECT_NEAR(umass_coherence({"p", "q"}, c2), std::log(4.0 / 3.0), 1e-12);
    EXPECT_GT(umass_coherence({"p", "q"}, c2), 0.0);
}

TEST(UMass, UnknownWord) {
    const std::vector<std::string> docs{"a b"};
    CoherenceCorpus corpus(docs);
    try {
        umass_coherence({"a", "zzz"}, corpus);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownWord);
    }
}

TEST(Cv, AlwaysTogetherIsOne) {
    const std::vector<std::string> docs{"a b c", "c b a", "b a c", "a c b x"};
    CoherenceCorpus corpus(docs);
    EXPECT_NEAR(cv_coherence({"a", "b", "c"}, corpus), 1.0, 1e-6);
    const std::vector<std::string> partial{"a b c", "d e", "a c b", "f"};
    CoherenceCorpus c2(partial);
    EXPECT_NEAR(cv_coherence({"a", "b", "c"}, c2), 1.0, 1e-6);
}

TEST(Cv, NeverTogetherHandOracle) {
    const std::vector<std::string> docs{"a x", "b y", "c", "d"};
    CoherenceCorpus corpus(docs);
    const double eps = 1e-12;
    // p(a) = p(b) = 1/4, p(a, b) = 0: NPMI(a, a) = 1, NPMI(a, b) = ln(eps * 16) / -ln(eps)
    const double y = std::log(eps * 16.0) / -std::log(eps);
    const double expected = (1.0 + y) / (std::sqrt(2.0) * std::sqrt(1.0 + y * y));
    EXPECT_NEAR(cv_coherence({"a", "b"}, corpus, 110, eps), expected, 1e-9);
    EXPECT_LT(y, -0.85);
}

TEST(Cv, WideWindowEqualsDocumentLevel) {
    const std::vector<std::string> docs{"a b c d e f", "a c", "b d f", "e a"};
    CoherenceCorpus corpus(docs);
    const std::vector<std::string> words{"a", "b", "c", "e"};
    EXPECT_DOUBLE_EQ(cv_coherence(words, corpus, 6), cv_coherence(words, corpus, 1000));
}

TEST(Cv, NgramTermsMatchContiguousRuns) {
    const std::vector<std::string> docs{"new york city", "york new", "new york"};
    CoherenceCorpus corpus(docs);
    EXPECT_EQ(corpus.documents_with("new york"), (std::vector<std::size_t>{0, 2}));
}

TEST(ScoreTopics, MeanAndSingleTopic) {
    const std::vector<std::string> docs{"a b", "a b", "c d", "c e"};
    CoherenceCorpus corpus(docs);
    CoherenceParams p;
    const auto one = score_topics({3}, {{"a", "b"}}, corpus, p);
    EXPECT_EQ(one.mean, one.per_topic[0]);
    const auto two = score_topics({0, 1}, {{"a", "b"}, {"c", "d", "e"}}, corpus, p);
    EXPECT_NEAR(two.mean, (two.per_topic[0] + two.per_topic[1]) / 2, 1e-15);
    p.metric = CoherenceMetric::u_mass;
    EXPECT_EQ(score_topics({0}, {{"a", "b"}}, corpus, p).metric, CoherenceMetric::u_mass);
}

TEST(CoherenceJson, RoundTrip) {
    const std::vector<std::string> docs{"a b", "a b", "c d"};
    CoherenceCorpus corpus(docs);
    const auto s = score_topics({0}, {{"a", "b"}}, corpus, CoherenceParams{});
    EXPECT_EQ(CoherenceScore::from_json(s.to_json()), s);
}

#include <gtest/gtest.h>

#include "support/model_fixture.hpp"
#include "support/warnings.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/evaluate.hpp"

using namespace topicforge;

TEST(MatchBandTest, Parse) {
    const auto b = MatchBand::parse("0.9:1.0");
    EXPECT_EQ(b.lo, 0.9);
    EXPECT_EQ(b.hi, 1.0);
    EXPECT_TRUE(b.contains(0.95));
    EXPECT_FALSE(b.contains(0.5));
    EXPECT_THROW(MatchBand::parse("0.9"), Error);
    EXPECT_THROW(MatchBand::parse("1.0:0.5"), Error);
    EXPECT_THROW(MatchBand::parse("a:b"), Error);
}

TEST(MatchTopics, SelfComparison) {
    const auto m = testsupport::pool_model();
    const auto r = match_topics(m, m);
    ASSERT_EQ(r.matched.size(), m.topic_count(false));
    for (const auto& p : r.matched) {
        EXPECT_EQ(p.topic_a, p.topic_b);
        EXPECT_NEAR(p.cosine, 1.0, 1e-12);
    }
    EXPECT_EQ(r.pairs.size(), m.topic_count(false) * m.topic_count(false));
    EXPECT_EQ(MatchReport::from_json(r.to_json()).matched.size(), r.matched.size());
}

TEST(MatchTopics, OrthogonalExcluded) {
    auto a = testsupport::pool_model({0, 1});
    auto b = a;
    auto& topics = b.state.topics;
    for (auto& t : topics) {
        std::fill(t.centroid.begin(), t.centroid.end(), 0.0);
    }
    for (auto& t : a.state.topics) {
        std::fill(t.centroid.begin(), t.centroid.end(), 0.0);
    }
    a.state.topics[0].centroid[0] = 1.0;
    a.state.topics[1].centroid[0] = 1.0;
    b.state.topics[0].centroid[1] = 1.0;
    b.state.topics[1].centroid[1] = 1.0;
    const auto r = match_topics(a, b);
    EXPECT_TRUE(r.matched.empty());
    for (const auto& p : r.pairs) EXPECT_EQ(p.cosine, 0.0);
}

TEST(MatchTopics, ProviderMismatchWarnsDimensionThrows) {
    const auto a = testsupport::pool_model({0, 1});
    auto b = a;
    b.provider_tag = "other";
    testsupport::CaptureWarnings w;
    match_topics(a, b);
    EXPECT_EQ(w.count(), 1u);
    for (auto& t : b.state.topics) t.centroid.push_back(0.0);
    EXPECT_THROW(match_topics(a, b), Error);
}

TEST(ModelCoherence, ExcludesOthers) {
    auto base = testsupport::pool_model({0, 1, 2});
    auto labels = base.state.assignments;
    for (std::size_t i = 0; i < labels.size(); i += 9) labels[i] = -1;
    const auto m = testsupport::model_from_labels(base.texts(), labels);
    const auto s = model_coherence(m, CoherenceParams{});
    EXPECT_EQ(s.topic_ids, (std::vector<int>{0, 1, 2}));
    double mean = 0;
    for (double v : s.per_topic) mean += v;
    EXPECT_NEAR(s.mean, mean / 3, 1e-12);
    const auto single = mark_other(m, {1, 2});
    const auto one = model_coherence(single, CoherenceParams{});
    EXPECT_EQ(one.mean, one.per_topic[0]);
    EXPECT_THROW(model_coherence(mark_other(m, {0, 1, 2}), CoherenceParams{}), Error);
}

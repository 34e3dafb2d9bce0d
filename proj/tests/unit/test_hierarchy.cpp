#include <gtest/gtest.h>

#include "support/model_fixture.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/hierarchy.hpp"

using namespace topicforge;

namespace {

TopicModel twin_model() {
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        texts.push_back("alpha beta gamma");
        labels.push_back(0);
        texts.push_back("alpha beta gamma");
        labels.push_back(1);
        texts.push_back("delta epsilon zeta");
        labels.push_back(2);
    }
    RepresentParams p;
    p.ngram_max = 1;
    return testsupport::model_from_labels(texts, labels, "twins", p);
}

} // namespace

TEST(AverageLinkage, HandExample) {
    const std::vector<std::vector<double>> d{{0, 0.1, 0.8}, {0.1, 0, 0.9}, {0.8, 0.9, 0}};
    const auto h = average_linkage({0, 1, 2}, d);
    ASSERT_EQ(h.nodes.size(), 2u);
    EXPECT_EQ(h.nodes[0].leaves, (std::vector<int>{0, 1}));
    EXPECT_DOUBLE_EQ(h.nodes[0].distance, 0.1);
    EXPECT_EQ(h.nodes[0].id, 3);
    EXPECT_DOUBLE_EQ(h.nodes[1].distance, 0.85);
    EXPECT_EQ(h.nodes[1].leaves, (std::vector<int>{0, 1, 2}));
}

TEST(AverageLinkage, TreeArityAndTies) {
    const std::size_t k = 7;
    std::vector<std::vector<double>> d(k, std::vector<double>(k, 0.5));
    std::vector<int> ids;
    for (std::size_t i = 0; i < k; ++i) {
        d[i][i] = 0;
        ids.push_back(static_cast<int>(i * 2));
    }
    const auto h = average_linkage(ids, d);
    EXPECT_EQ(h.nodes.size(), k - 1);
    EXPECT_EQ(h.nodes[0].leaves, (std::vector<int>{0, 2}));
    EXPECT_EQ(h.nodes[0].id, 13);
    EXPECT_EQ(h.nodes.back().leaves.size(), k);
    EXPECT_THROW(average_linkage({1}, {{0}}), Error);
}

TEST(TopicHierarchyTest, IdenticalRowsMergeAtZero) {
    const auto m = twin_model();
    const auto h = topic_hierarchy(m);
    ASSERT_EQ(h.nodes.size(), 2u);
    EXPECT_EQ(h.nodes[0].leaves, (std::vector<int>{0, 1}));
    EXPECT_NEAR(h.nodes[0].distance, 0.0, 1e-12);
    const auto back = TopicHierarchy::from_json(h.to_json());
    EXPECT_EQ(back.nodes.size(), 2u);
    EXPECT_EQ(back.leaves, h.leaves);
}

TEST(DistanceMapTest, EntriesAndIdenticalTopics) {
    const auto m = twin_model();
    const auto map = distance_map(m);
    ASSERT_EQ(map.entries.size(), 3u);
    EXPECT_NEAR(map.entries[0].x, map.entries[1].x, 1e-12);
    EXPECT_NEAR(map.entries[0].y, map.entries[1].y, 1e-12);
    const auto pools = testsupport::pool_model();
    EXPECT_EQ(distance_map(pools).entries.size(), pools.topic_count(false));
}

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/model.hpp"

namespace topicforge {

struct HierarchyNode {
    int id = 0;        ///< internal ids continue after the largest topic id
    int left = 0;
    int right = 0;
    double distance = 0.0;
    std::vector<int> leaves; ///< topic ids under this node, ascending
};

/// Agglomerative average-linkage tree over the cosine distances of non-Other c-TF-IDF rows.
struct TopicHierarchy {
    std::vector<int> leaves;          ///< topic ids, ascending
    std::vector<HierarchyNode> nodes; ///< in merge order; the last one is the root

    nlohmann::json to_json() const;
    static TopicHierarchy from_json(const nlohmann::json& j);
};

/// Average linkage on a symmetric distance matrix. Ties go to the pair whose smallest
/// leaf ids are lowest.
TopicHierarchy average_linkage(const std::vector<int>& leaf_ids, const std::vector<std::vector<double>>& distances);

TopicHierarchy topic_hierarchy(const TopicModel& model);

struct DistanceMapEntry {
    int topic_id = 0;
    double x = 0.0;
    double y = 0.0;
    std::size_t size = 0;
    std::string label;
    std::vector<std::string> keywords;
};

struct DistanceMap {
    std::vector<DistanceMapEntry> entries;
    std::vector<double> explained_variance;

    nlohmann::json to_json() const;
};

/// 2-D PCA projection of the non-Other c-TF-IDF rows.
DistanceMap distance_map(const TopicModel& model);

} // namespace topicforge

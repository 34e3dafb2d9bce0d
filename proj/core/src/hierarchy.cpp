#include "topicforge/hierarchy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "topicforge/errors.hpp"
#include "topicforge/pca.hpp"

namespace topicforge {

using nlohmann::json;

json TopicHierarchy::to_json() const {
    json nodes_json = json::array();
    for (const auto& n : nodes) {
        nodes_json.push_back(
            json{{"id", n.id}, {"left", n.left}, {"right", n.right}, {"distance", n.distance}, {"leaves", n.leaves}});
    }
    return json{{"leaves", leaves}, {"nodes", nodes_json}};
}

TopicHierarchy TopicHierarchy::from_json(const json& j) {
    TopicHierarchy h;
    h.leaves = j.at("leaves").get<std::vector<int>>();
    for (const auto& n : j.at("nodes")) {
        h.nodes.push_back({n.at("id").get<int>(), n.at("left").get<int>(), n.at("right").get<int>(),
                           n.at("distance").get<double>(), n.at("leaves").get<std::vector<int>>()});
    }
    return h;
}

TopicHierarchy average_linkage(const std::vector<int>& leaf_ids, const std::vector<std::vector<double>>& distances) {
    const std::size_t k = leaf_ids.size();
    if (k < 2) throw Error(ErrorKind::InsufficientData, "a hierarchy needs at least 2 topics");
    if (distances.size() != k) throw Error(ErrorKind::DimensionMismatch, "distance matrix does not match leaf count");

    struct Cluster {
        int id;
        std::vector<int> leaves;
        std::vector<std::size_t> members; ///< indices into leaf_ids
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < k; ++i) active.push_back({leaf_ids[i], {leaf_ids[i]}, {i}});

    TopicHierarchy h;
    h.leaves = leaf_ids;
    std::sort(h.leaves.begin(), h.leaves.end());
    int next_id = *std::max_element(leaf_ids.begin(), leaf_ids.end()) + 1;

    auto linkage = [&](const Cluster& a, const Cluster& b) {
        double sum = 0.0;
        for (auto i : a.members) {
            for (auto j : b.members) sum += distances[i][j];
        }
        return sum / static_cast<double>(a.members.size() * b.members.size());
    };

    while (active.size() > 1) {
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        std::pair<int, int> best_key{0, 0};
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double d = linkage(active[a], active[b]);
                std::pair<int, int> key = std::minmax(active[a].leaves.front(), active[b].leaves.front());
                if (d < best || (d == best && key < best_key)) {
                    best = d;
                    best_a = a;
                    best_b = b;
                    best_key = key;
                }
            }
        }
        Cluster& a = active[best_a];
        Cluster& b = active[best_b];
        if (b.leaves.front() < a.leaves.front()) std::swap(a, b);
        HierarchyNode node;
        node.id = next_id++;
        node.left = a.id;
        node.right = b.id;
        node.distance = best;
        node.leaves = a.leaves;
        node.leaves.insert(node.leaves.end(), b.leaves.begin(), b.leaves.end());
        std::sort(node.leaves.begin(), node.leaves.end());

        Cluster merged{node.id, node.leaves, a.members};
        merged.members.insert(merged.members.end(), b.members.begin(), b.members.end());
        h.nodes.push_back(std::move(node));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_b));
        active[best_a] = std::move(merged);
    }
    return h;
}

namespace {

struct TopicRows {
    std::vector<const Topic*> topics;
    Matrix rows;
};

TopicRows non_other_rows(const TopicModel& model) {
    TopicRows out;
    out.topics = model.non_other_topics();
    if (out.topics.size() < 2) {
        throw Error(ErrorKind::InsufficientData,
                    "need at least 2 non-Other topics, have " + std::to_string(out.topics.size()));
    }
    const auto& m = model.state.ctfidf;
    out.rows = Matrix(out.topics.size(), m.weights.cols());
    for (std::size_t i = 0; i < out.topics.size(); ++i) {
        const auto r = m.row_of(out.topics[i]->topic_id);
        if (!r) continue;
        const auto src = m.weights.row(*r);
        std::copy(src.begin(), src.end(), out.rows.row(i).begin());
    }
    return out;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
    const double nu = squared_norm(u);
    const double nv = squared_norm(v);
    if (nu == 0.0 || nv == 0.0) return 1.0;
    const double c = std::clamp(dot(u, v) / std::sqrt(nu * nv), -1.0, 1.0);
    return std::max(0.0, 1.0 - c);
}

} // namespace

TopicHierarchy topic_hierarchy(const TopicModel& model) {
    const auto rows = non_other_rows(model);
    const std::size_t k = rows.topics.size();
    std::vector<int> ids;
    for (const auto* t : rows.topics) ids.push_back(t->topic_id);
    std::vector<std::vector<double>> d(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            d[i][j] = d[j][i] = cosine_distance(rows.rows.row(i), rows.rows.row(j));
        }
    }
    return average_linkage(ids, d);
}

json DistanceMap::to_json() const {
    json entries_json = json::array();
    for (const auto& e : entries) {
        entries_json.push_back(json{{"topic_id", e.topic_id},
                                    {"x", e.x},
                                    {"y", e.y},
                                    {"size", e.size},
                                    {"label", e.label},
                                    {"keywords", e.keywords}});
    }
    return json{{"entries", entries_json}, {"explained_variance", explained_variance}};
}

DistanceMap distance_map(const TopicModel& model) {
    const auto rows = non_other_rows(model);
    DistanceMap map;
    const std::size_t nc = std::min<std::size_t>(2, rows.rows.cols());
    std::vector<std::array<double, 2>> xy(rows.topics.size(), {0.0, 0.0});
    if (nc > 0) {
        const auto pca = pca_reduce(rows.rows, nc);
        for (std::size_t i = 0; i < rows.topics.size(); ++i) {
            for (std::size_t c = 0; c < nc; ++c) xy[i][c] = pca.layout.coords(i, c);
        }
        map.explained_variance = pca.variances;
    }
    for (std::size_t i = 0; i < rows.topics.size(); ++i) {
        const auto* t = rows.topics[i];
        DistanceMapEntry e;
        e.topic_id = t->topic_id;
        e.x = std::isfinite(xy[i][0]) ? xy[i][0] : 0.0;
        e.y = std::isfinite(xy[i][1]) ? xy[i][1] : 0.0;
        e.size = t->size;
        e.label = t->label;
        for (const auto& kw : t->keywords) e.keywords.push_back(kw.term);
        map.entries.push_back(std::move(e));
    }
    return map;
}

} // namespace topicforge

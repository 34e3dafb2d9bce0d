#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/matrix.hpp"

namespace topicforge {

struct HdbscanParams {
    std::size_t min_cluster_size = 40;
    std::optional<std::size_t> min_samples; ///< defaults to min_cluster_size
    /// Lets the root be selected when no split survives; off by default.
    bool allow_single_cluster = false;

    std::size_t effective_min_samples() const { return min_samples.value_or(min_cluster_size); }
    void validate() const;
    nlohmann::json to_json() const;
    static HdbscanParams from_json(const nlohmann::json& j);
};

/// Distance to the k-th nearest neighbour, the point itself being the 0-th.
std::vector<double> core_distances(const Matrix& points, std::size_t k);

inline double mutual_reachability(double distance, double core_a, double core_b) {
    return std::max({core_a, core_b, distance});
}

struct MstEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm over the implicit complete graph with the given weight function.
/// Ties pick the lower vertex index.
std::vector<MstEdge> build_mst(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight);

/// MST of the mutual-reachability graph of `points` under the Euclidean metric.
std::vector<MstEdge> build_mst(const Matrix& points, std::span<const double> core);

/// Edge of the condensed tree. Cluster ids start at n_points (the root); children
/// below n_points are points.
struct CondensedEdge {
    std::size_t parent = 0;
    std::size_t child = 0;
    double lambda = 0.0;
    std::size_t child_size = 1;
};

struct CondensedTree {
    std::size_t n_points = 0;
    std::vector<CondensedEdge> edges;

    std::size_t root() const { return n_points; }
};

/// Lambda = 1 / distance, capped at this value for zero distances.
inline constexpr double kLambdaCap = 1e12;

CondensedTree condense_tree(std::vector<MstEdge> mst, std::size_t n_points, std::size_t min_cluster_size);

struct ClusterLabeling {
    std::vector<int> labels; ///< -1 = noise, otherwise dense ids in order of first occurrence
    std::vector<double> stabilities;
    std::vector<double> membership_strength;

    std::size_t n_clusters() const { return stabilities.size(); }
    nlohmann::json to_json(const HdbscanParams& params) const;
    static ClusterLabeling from_json(const nlohmann::json& j);
};

/// Excess-of-mass selection on a condensed tree.
ClusterLabeling extract_eom(const CondensedTree& tree, bool allow_single_cluster = false);

ClusterLabeling cluster(const Matrix& points, const HdbscanParams& params);

} // namespace topicforge

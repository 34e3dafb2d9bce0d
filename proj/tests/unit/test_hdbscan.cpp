#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "synthetic.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/hdbscan.hpp"

using namespace topicforge;

namespace {

std::vector<double> weights(const std::vector<MstEdge>& mst) {
    std::vector<double> w;
    for (const auto& e : mst) w.push_back(e.weight);
    return w;
}

double total_weight(const std::vector<MstEdge>& mst) { return testsupport::ascending_total(weights(mst)); }

Matrix with_outliers(const Matrix& points, std::size_t count, double radius) {
    Matrix out(points.rows() + count, points.cols());
    std::copy(points.data().begin(), points.data().end(), out.data().begin());
    for (std::size_t o = 0; o < count; ++o) {
        auto row = out.row(points.rows() + o);
        row[o % points.cols()] = (o % 2 == 0 ? 1.0 : -1.0) * radius * static_cast<double>(o + 1);
    }
    return out;
}

} // namespace

TEST(CoreDistances, HandCase) {
    Matrix m(3, 1, {0, 1, 3});
    EXPECT_EQ(core_distances(m, 1), (std::vector<double>{1, 1, 2}));
    EXPECT_THROW(core_distances(m, 3), Error);
}

TEST(CoreDistances, Duplicates) {
    Matrix m(4, 2, {1, 1, 1, 1, 1, 1, 9, 9});
    const auto core = core_distances(m, 2);
    EXPECT_EQ(core[0], 0.0);
    EXPECT_EQ(core[1], 0.0);
    EXPECT_EQ(core[2], 0.0);
}

TEST(MutualReachability, HandCases) {
    EXPECT_EQ(mutual_reachability(1, 0.5, 0.5), 1);
    EXPECT_EQ(mutual_reachability(1, 2, 0.5), 2);
    EXPECT_EQ(mutual_reachability(0, 0, 0), 0);
}

TEST(Mst, TriangleAndPair) {
    const double w[3][3] = {{0, 1, 3}, {1, 0, 2}, {3, 2, 0}};
    const auto mst = build_mst(3, [&](std::size_t a, std::size_t b) { return w[a][b]; });
    EXPECT_EQ(mst.size(), 2u);
    EXPECT_EQ(total_weight(mst), 3.0);
    const auto pair = build_mst(2, [](std::size_t, std::size_t) { return 4.5; });
    ASSERT_EQ(pair.size(), 1u);
    EXPECT_EQ(pair[0].weight, 4.5);
}

TEST(Mst, PrimEqualsKruskal) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 199;
        const std::size_t d = 1 + rng() % 5;
        const auto pts = testsupport::random_matrix(n, d, rng());
        const std::size_t k = 1 + rng() % std::min<std::size_t>(n - 1, 10);
        const auto core = core_distances(pts, k);
        std::vector<testsupport::WeightedPair> edges;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                const double dist = std::sqrt(squared_euclidean(pts.row(a), pts.row(b)));
                edges.push_back({a, b, mutual_reachability(dist, core[a], core[b])});
            }
        }
        const auto prim = build_mst(pts, core);
        ASSERT_EQ(prim.size(), n - 1);
        const auto kruskal = testsupport::kruskal_weights(n, edges);
        auto prim_sorted = weights(prim);
        std::sort(prim_sorted.begin(), prim_sorted.end());
        ASSERT_EQ(prim_sorted, kruskal) << "trial " << trial;
        ASSERT_EQ(total_weight(prim), testsupport::ascending_total(kruskal)) << "trial " << trial;
    }
}

TEST(CondenseTree, TightGroupHasNoSplit) {
    auto pts = testsupport::random_matrix(50, 2, 3);
    for (auto& x : pts.data()) x *= 1e-3;
    const auto core = core_distances(pts, 5);
    const auto tree = condense_tree(build_mst(pts, core), 50, 10);
    for (const auto& e : tree.edges) {
        EXPECT_EQ(e.parent, tree.root());
        EXPECT_EQ(e.child_size, 1u);
    }
    EXPECT_EQ(tree.edges.size(), 50u);
}

TEST(CondenseTree, SmallInputIsRootOnly) {
    const auto pts = testsupport::random_matrix(10, 2, 3);
    const auto tree = condense_tree(build_mst(pts, core_distances(pts, 3)), 10, 40);
    EXPECT_EQ(tree.edges.size(), 10u);
    for (const auto& e : tree.edges) EXPECT_LT(e.child, 10u);
}

TEST(CondenseTree, TwoBlobsSplitOnce) {
    const auto centers = fixtures::separated_centers(2, 3, 20.0, 1);
    const auto blobs = fixtures::gaussian_blobs(centers, 50, 0.1, 2);
    const auto tree = condense_tree(build_mst(blobs.points, core_distances(blobs.points, 30)), 100, 30);
    std::size_t cluster_children = 0;
    for (const auto& e : tree.edges) {
        if (e.child >= 100) ++cluster_children;
    }
    EXPECT_EQ(cluster_children, 2u);
    HdbscanParams p;
    p.min_cluster_size = 30;
    const auto labels = cluster(blobs.points, p);
    EXPECT_EQ(labels.n_clusters(), 2u);
    EXPECT_DOUBLE_EQ(fixtures::adjusted_rand_index(labels.labels, blobs.truth), 1.0);
}

TEST(ExtractEom, SingleClusterTree) {
    auto pts = testsupport::random_matrix(50, 2, 4);
    for (auto& x : pts.data()) x *= 1e-3;
    const auto tree = condense_tree(build_mst(pts, core_distances(pts, 5)), 50, 10);
    const auto labels = extract_eom(tree, true);
    EXPECT_EQ(labels.stabilities.size(), 1u);
    for (int l : labels.labels) EXPECT_EQ(l, 0);
}

TEST(Cluster, UniformIsMostlyNoise) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    Matrix m(60, 2);
    for (auto& x : m.data()) x = u(rng);
    HdbscanParams p;
    p.min_cluster_size = 40;
    const auto labels = cluster(m, p);
    const auto noise = std::count(labels.labels.begin(), labels.labels.end(), -1);
    EXPECT_GE(noise, 30);
}

TEST(Cluster, DefaultsOnTenPointsAreAllNoise) {
    const auto labels = cluster(testsupport::random_matrix(10, 3, 1), HdbscanParams{});
    for (int l : labels.labels) EXPECT_EQ(l, -1);
    EXPECT_EQ(labels.n_clusters(), 0u);
}

TEST(Cluster, ThreeBlobsWithOutliers) {
    const auto centers = fixtures::separated_centers(3, 10, 10.0, 31);
    const auto blobs = fixtures::gaussian_blobs(centers, 100, 0.05, 32);
    const auto pts = with_outliers(blobs.points, 5, 1000.0);
    HdbscanParams p;
    p.min_cluster_size = 30;
    const auto result = cluster(pts, p);
    const std::vector<int> found(result.labels.begin(), result.labels.begin() + 300);
    EXPECT_EQ(result.n_clusters(), 3u);
    EXPECT_GE(fixtures::adjusted_rand_index(found, blobs.truth), 0.95);
    for (std::size_t o = 300; o < 305; ++o) EXPECT_EQ(result.labels[o], -1);
    for (double s : result.membership_strength) {
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Cluster, PermutationInvariantUpToNaming) {
    const auto centers = fixtures::separated_centers(3, 4, 10.0, 41);
    const auto blobs = fixtures::gaussian_blobs(centers, 40, 0.1, 42);
    HdbscanParams p;
    p.min_cluster_size = 15;
    const auto base = cluster(blobs.points, p);
    std::vector<std::size_t> perm(blobs.points.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(43));
    Matrix shuffled(blobs.points.rows(), blobs.points.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        std::copy(blobs.points.row(perm[i]).begin(), blobs.points.row(perm[i]).end(), shuffled.row(i).begin());
    }
    const auto other = cluster(shuffled, p);
    std::map<int, int> mapping;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const int a = other.labels[i], b = base.labels[perm[i]];
        if (a == -1 || b == -1) {
            EXPECT_EQ(a, b);
            continue;
        }
        auto [it, inserted] = mapping.emplace(a, b);
        EXPECT_EQ(it->second, b);
    }
    for (std::size_t i = 0, next = 0; i < other.labels.size(); ++i) {
        if (other.labels[i] < 0) continue;
        if (static_cast<std::size_t>(other.labels[i]) == next) ++next;
        EXPECT_LT(static_cast<std::size_t>(other.labels[i]), next);
    }
}

TEST(HdbscanParamsTest, JsonAndValidation) {
    HdbscanParams p;
    EXPECT_EQ(p.min_cluster_size, 40u);
    EXPECT_EQ(p.effective_min_samples(), 40u);
    p.min_samples = 5;
    EXPECT_EQ(HdbscanParams::from_json(p.to_json()).effective_min_samples(), 5u);
    p.min_cluster_size = 1;
    EXPECT_THROW(p.validate(), Error);
}

TEST(ClusterLabelingTest, JsonRoundTrip) {
    ClusterLabeling l{{0, -1, 1, 0}, {1.5, 2.5}, {1.0, 0.0, 0.5, 0.25}};
    const auto back = ClusterLabeling::from_json(l.to_json(HdbscanParams{}));
    EXPECT_EQ(back.labels, l.labels);
    EXPECT_EQ(back.stabilities, l.stabilities);
    EXPECT_EQ(back.membership_strength, l.membership_strength);
}

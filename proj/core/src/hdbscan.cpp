#include "topicforge/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "parallel.hpp"
#include "topicforge/errors.hpp"

namespace topicforge {

using nlohmann::json;

void HdbscanParams::validate() const {
    if (min_cluster_size < 2) throw Error(ErrorKind::Config, "min_cluster_size must be at least 2");
    if (min_samples && *min_samples < 1) throw Error(ErrorKind::Config, "min_samples must be at least 1");
}

json HdbscanParams::to_json() const {
    return json{{"min_cluster_size", min_cluster_size},
                {"min_samples", effective_min_samples()},
                {"metric", "euclidean"},
                {"allow_single_cluster", allow_single_cluster}};
}

HdbscanParams HdbscanParams::from_json(const json& j) {
    HdbscanParams p;
    p.min_cluster_size = j.value("min_cluster_size", p.min_cluster_size);
    if (j.contains("min_samples") && !j.at("min_samples").is_null()) p.min_samples = j.at("min_samples").get<std::size_t>();
    if (j.value("metric", std::string("euclidean")) != "euclidean") {
        throw Error(ErrorKind::Config, "HDBSCAN supports only the euclidean metric");
    }
    p.allow_single_cluster = j.value("allow_single_cluster", false);
    p.validate();
    return p;
}

std::vector<double> core_distances(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    if (n <= k) {
        throw Error(ErrorKind::InsufficientData,
                    "core distances need more than k=" + std::to_string(k) + " points, got " + std::to_string(n));
    }
    std::vector<double> core(n);
    detail::parallel_for(n, 0, [&](std::size_t i) {
        std::vector<double> d(n);
        for (std::size_t j = 0; j < n; ++j) d[j] = std::sqrt(squared_euclidean(points.row(i), points.row(j)));
        std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
        core[i] = d[k];
    });
    return core;
}

std::vector<MstEdge> build_mst(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight) {
    if (n < 2) throw Error(ErrorKind::InsufficientData, "an MST needs at least 2 vertices");
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::vector<MstEdge> edges;
    edges.reserve(n - 1);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t next = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const double w = weight(current, v);
            if (w < best[v]) {
                best[v] = w;
                from[v] = current;
            }
            if (next == n || best[v] < best[next]) next = v;
        }
        in_tree[next] = true;
        edges.push_back({from[next], next, best[next]});
        current = next;
    }
    return edges;
}

std::vector<MstEdge> build_mst(const Matrix& points, std::span<const double> core) {
    if (core.size() != points.rows()) throw Error(ErrorKind::DimensionMismatch, "core distances not aligned with points");
    return build_mst(points.rows(), [&](std::size_t a, std::size_t b) {
        return mutual_reachability(std::sqrt(squared_euclidean(points.row(a), points.row(b))), core[a], core[b]);
    });
}

namespace {

double lambda_of(double distance) { return distance > 0.0 ? std::min(1.0 / distance, kLambdaCap) : kLambdaCap; }

struct DendroNode {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void link(std::size_t child, std::size_t root) { parent_[child] = root; }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

CondensedTree condense_tree(std::vector<MstEdge> mst, std::size_t n_points, std::size_t min_cluster_size) {
    CondensedTree tree;
    tree.n_points = n_points;
    if (n_points < 2) return tree;
    if (mst.size() != n_points - 1) throw Error(ErrorKind::InputFormat, "MST must have n-1 edges");
    std::sort(mst.begin(), mst.end(), [](const MstEdge& x, const MstEdge& y) {
        return std::make_tuple(x.weight, std::min(x.a, x.b), std::max(x.a, x.b)) <
               std::make_tuple(y.weight, std::min(y.a, y.b), std::max(y.a, y.b));
    });

    // Single-linkage dendrogram: node n + m merges the components joined by edge m.
    std::vector<DendroNode> nodes(2 * n_points - 1);
    for (std::size_t p = 0; p < n_points; ++p) nodes[p].size = 1;
    UnionFind uf(2 * n_points - 1);
    for (std::size_t m = 0; m < mst.size(); ++m) {
        const std::size_t id = n_points + m;
        const std::size_t ra = uf.find(mst[m].a);
        const std::size_t rb = uf.find(mst[m].b);
        nodes[id] = {ra, rb, mst[m].weight, nodes[ra].size + nodes[rb].size};
        uf.link(ra, id);
        uf.link(rb, id);
    }

    auto leaf_points = [&](std::size_t node, auto&& emit) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            if (x < n_points) {
                emit(x);
            } else {
                stack.push_back(nodes[x].right);
                stack.push_back(nodes[x].left);
            }
        }
    };

    std::size_t next_label = n_points + 1;
    // (dendrogram node, cluster label it belongs to)
    std::vector<std::pair<std::size_t, std::size_t>> queue{{nodes.size() - 1, n_points}};
    for (std::size_t q = 0; q < queue.size(); ++q) {
        const auto [node, label] = queue[q];
        if (node < n_points) continue;
        const auto& nd = nodes[node];
        const double lambda = lambda_of(nd.distance);
        const std::size_t left_size = nodes[nd.left].size;
        const std::size_t right_size = nodes[nd.right].size;
        const bool left_big = left_size >= min_cluster_size;
        const bool right_big = right_size >= min_cluster_size;
        if (left_big && right_big) {
            for (const auto& [child, size] : {std::pair{nd.left, left_size}, std::pair{nd.right, right_size}}) {
                const std::size_t child_label = next_label++;
                tree.edges.push_back({label, child_label, lambda, size});
                queue.emplace_back(child, child_label);
            }
        } else {
            for (const auto& [child, big] : {std::pair{nd.left, left_big}, std::pair{nd.right, right_big}}) {
                if (big) {
                    queue.emplace_back(child, label);
                } else {
                    leaf_points(child, [&](std::size_t p) { tree.edges.push_back({label, p, lambda, 1}); });
                }
            }
        }
    }
    return tree;
}

ClusterLabeling extract_eom(const CondensedTree& tree, bool allow_single_cluster) {
    const std::size_t n = tree.n_points;
    const std::size_t root = tree.root();
    std::size_t max_label = root;
    for (const auto& e : tree.edges) max_label = std::max({max_label, e.parent, e.child});
    const std::size_t n_clusters = max_label - root + 1;
    auto idx = [&](std::size_t cluster) { return cluster - root; };

    std::vector<double> birth(n_clusters, 0.0);
    std::vector<std::vector<std::size_t>> children(n_clusters);
    std::vector<std::size_t> point_parent(n, root);
    std::vector<double> point_lambda(n, 0.0);
    std::vector<std::size_t> cluster_parent(n_clusters, root);
    for (const auto& e : tree.edges) {
        if (e.child >= root) {
            birth[idx(e.child)] = e.lambda;
            children[idx(e.parent)].push_back(e.child);
            cluster_parent[idx(e.child)] = e.parent;
        } else {
            point_parent[e.child] = e.parent;
            point_lambda[e.child] = e.lambda;
        }
    }
    std::vector<double> stability(n_clusters, 0.0);
    for (const auto& e : tree.edges) {
        stability[idx(e.parent)] += (e.lambda - birth[idx(e.parent)]) * static_cast<double>(e.child_size);
    }

    // Children always carry larger ids than their parent, so a reverse sweep is bottom-up.
    std::vector<bool> selected(n_clusters, false);
    std::vector<double> subtree(n_clusters, 0.0);
    const bool root_eligible = allow_single_cluster;
    for (std::size_t c = n_clusters; c-- > 0;) {
        if (c == 0 && !root_eligible) break;
        double child_sum = 0.0;
        for (std::size_t ch : children[c]) child_sum += subtree[idx(ch)];
        if (stability[c] > child_sum) {
            selected[c] = true;
            subtree[c] = stability[c];
            std::vector<std::size_t> stack(children[c].begin(), children[c].end());
            while (!stack.empty()) {
                const std::size_t d = idx(stack.back());
                stack.pop_back();
                selected[d] = false;
                for (std::size_t g : children[d]) stack.push_back(g);
            }
        } else {
            subtree[c] = child_sum;
        }
    }

    // Deepest lambda reached by any point inside each cluster's subtree.
    std::vector<double> max_lambda(n_clusters, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t c = point_parent[p];
        while (true) {
            max_lambda[idx(c)] = std::max(max_lambda[idx(c)], point_lambda[p]);
            if (c == root) break;
            c = cluster_parent[idx(c)];
        }
    }
    ClusterLabeling out;
    out.labels.assign(n, -1);
    out.membership_strength.assign(n, 0.0);
    std::vector<int> dense(n_clusters, -1);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t c = point_parent[p];
        std::optional<std::size_t> owner;
        while (true) {
            if (selected[idx(c)]) {
                owner = c;
                break;
            }
            if (c == root) break;
            c = cluster_parent[idx(c)];
        }
        if (!owner) continue;
        const std::size_t o = idx(*owner);
        if (dense[o] < 0) {
            dense[o] = static_cast<int>(out.stabilities.size());
            out.stabilities.push_back(stability[o]);
        }
        out.labels[p] = dense[o];
        const double lmax = max_lambda[o];
        out.membership_strength[p] = lmax > 0.0 ? std::clamp(std::min(point_lambda[p], lmax) / lmax, 0.0, 1.0) : 1.0;
    }
    return out;
}

json ClusterLabeling::to_json(const HdbscanParams& params) const {
    return json{{"params", params.to_json()},
                {"labels", labels},
                {"stabilities", stabilities},
                {"membership", membership_strength}};
}

ClusterLabeling ClusterLabeling::from_json(const json& j) {
    ClusterLabeling l;
    l.labels = j.at("labels").get<std::vector<int>>();
    l.stabilities = j.at("stabilities").get<std::vector<double>>();
    l.membership_strength = j.at("membership").get<std::vector<double>>();
    return l;
}

ClusterLabeling cluster(const Matrix& points, const HdbscanParams& params) {
    params.validate();
    const std::size_t n = points.rows();
    if (n < 2) throw Error(ErrorKind::InsufficientData, "clustering needs at least 2 points");
    std::size_t k = params.effective_min_samples();
    if (k >= n) {
        warn("min_samples=" + std::to_string(k) + " exceeds the " + std::to_string(n) +
             " available points; using " + std::to_string(n - 1));
        k = n - 1;
    }
    const auto core = core_distances(points, k);
    auto mst = build_mst(points, core);
    const auto tree = condense_tree(std::move(mst), n, params.min_cluster_size);
    return extract_eom(tree, params.allow_single_cluster);
}

} // namespace topicforge

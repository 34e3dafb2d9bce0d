#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "topicforge/matrix.hpp"

namespace topicforge {

enum class Metric { cosine, euclidean };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

struct UmapParams {
    std::size_t n_neighbors = 15;
    std::size_t n_components = 5;
    double min_dist = 0.0;
    double spread = 1.0;
    Metric metric = Metric::cosine;
    std::size_t n_epochs = 500;
    double learning_rate = 1.0;
    std::size_t negative_sample_rate = 5;
    std::uint64_t seed = 42;

    void validate() const;
    nlohmann::json to_json() const;
    static UmapParams from_json(const nlohmann::json& j);
};

/// Exact k-nearest-neighbour lists; rows sorted by (distance, index), self excluded.
struct KnnGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::size_t> neighbor_ids; ///< n x k
    std::vector<double> distances;         ///< n x k

    std::span<const std::size_t> ids(std::size_t i) const { return {neighbor_ids.data() + i * k, k}; }
    std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }

    friend bool operator==(const KnnGraph&, const KnnGraph&) = default;
};

/// Cosine distance is 1 - cosine similarity. Rows are computed in parallel with
/// `threads` workers (0 = hardware concurrency); the result does not depend on it.
KnnGraph knn_graph(const Matrix& points, std::size_t k, Metric metric, unsigned threads = 0);

struct SmoothKnn {
    double rho = 0.0;
    double sigma = 0.0;
    std::vector<double> memberships;
    bool unattainable = false; ///< the log2(k) target lies outside the sigma search range
};

/// Calibrates one row of sorted neighbour distances so that
/// sum_j exp(-max(0, d_j - rho) / sigma) = log2(k), bisecting sigma on (1e-6, 1e4].
SmoothKnn smooth_knn(std::span<const double> sorted_distances);

struct WeightedEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 0.0;

    friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Symmetric sparse membership graph. Entries hold both orientations, sorted by (i, j).
struct FuzzySimplicialSet {
    std::size_t n = 0;
    std::vector<WeightedEdge> entries;
    std::vector<double> rho;
    std::vector<double> sigma;

    double weight(std::size_t i, std::size_t j) const;
};

/// Probabilistic t-conorm a + a^T - a o a^T over directed memberships in [0, 1].
FuzzySimplicialSet fuzzy_union(std::size_t n, const std::vector<WeightedEdge>& directed);

FuzzySimplicialSet fuzzy_simplicial_set(const KnnGraph& graph);

struct CurveFit {
    double a = 0.0;
    double b = 0.0;
    double rms = 0.0;
};

/// Least-squares fit of 1 / (1 + a d^{2b}) to the min_dist/spread target curve.
CurveFit fit_ab(double min_dist, double spread);

double low_dim_kernel(double distance, double a, double b);

/// d log(q) / d y_i = coeff * (y_i - y_j) where q is the low-dimensional kernel and
/// the argument is the squared distance.
double attractive_grad_coeff(double dist_sq, double a, double b);
/// d log(1 - q) / d y_i = coeff * (y_i - y_j). `smoothing` is added to dist_sq in
/// the denominator (the optimizer uses 0.001).
double repulsive_grad_coeff(double dist_sq, double a, double b, double smoothing = 0.0);

struct LowDimLayout {
    Matrix coords;
    nlohmann::json params;
    std::uint64_t seed = 0;
};

/// Seeded uniform initialization in [-10, 10]^n_components.
Matrix random_init(std::size_t n, std::size_t n_components, std::uint64_t seed);

LowDimLayout optimize_layout(const FuzzySimplicialSet& graph, const UmapParams& params, Matrix initial);
LowDimLayout optimize_layout(const FuzzySimplicialSet& graph, const UmapParams& params);

/// knn_graph -> smooth_knn -> fuzzy_union -> random_init -> optimize_layout.
LowDimLayout reduce(const Matrix& embeddings, const UmapParams& params);

void save_layout(const LowDimLayout& layout, const std::filesystem::path& path);
LowDimLayout load_layout(const std::filesystem::path& path);

} // namespace topicforge

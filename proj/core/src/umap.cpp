#include "topicforge/umap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "parallel.hpp"
#include "topicforge/embedding.hpp"
#include "topicforge/errors.hpp"

namespace topicforge {

using nlohmann::json;

std::string_view to_string(Metric metric) { return metric == Metric::cosine ? "cosine" : "euclidean"; }

Metric parse_metric(std::string_view text) {
    if (text == "cosine") return Metric::cosine;
    if (text == "euclidean") return Metric::euclidean;
    throw Error(ErrorKind::Config, "unknown metric '" + std::string(text) + "'");
}

void UmapParams::validate() const {
    if (n_neighbors < 2) throw Error(ErrorKind::Config, "n_neighbors must be at least 2");
    if (n_components < 1) throw Error(ErrorKind::Config, "n_components must be at least 1");
    if (!(spread > 0.0)) throw Error(ErrorKind::Config, "spread must be positive");
    if (min_dist < 0.0 || min_dist > spread) throw Error(ErrorKind::Config, "min_dist must lie in [0, spread]");
    if (negative_sample_rate < 1) throw Error(ErrorKind::Config, "negative_sample_rate must be at least 1");
}

json UmapParams::to_json() const {
    return json{{"n_neighbors", n_neighbors},   {"n_components", n_components},
                {"min_dist", min_dist},         {"spread", spread},
                {"metric", to_string(metric)},  {"n_epochs", n_epochs},
                {"learning_rate", learning_rate}, {"negative_sample_rate", negative_sample_rate},
                {"seed", seed}};
}

UmapParams UmapParams::from_json(const json& j) {
    UmapParams p;
    p.n_neighbors = j.value("n_neighbors", p.n_neighbors);
    p.n_components = j.value("n_components", p.n_components);
    p.min_dist = j.value("min_dist", p.min_dist);
    p.spread = j.value("spread", p.spread);
    if (j.contains("metric")) p.metric = parse_metric(j.at("metric").get<std::string>());
    p.n_epochs = j.value("n_epochs", p.n_epochs);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.negative_sample_rate = j.value("negative_sample_rate", p.negative_sample_rate);
    p.seed = j.value("seed", p.seed);
    p.validate();
    return p;
}

namespace {

Matrix unit_rows(const Matrix& points) {
    Matrix out = points;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        const double norm = std::sqrt(squared_norm(r));
        if (norm == 0.0) {
            throw Error(ErrorKind::ZeroVector, "row " + std::to_string(i) + " has zero norm under the cosine metric");
        }
        for (auto& x : r) x /= norm;
    }
    return out;
}

} // namespace

KnnGraph knn_graph(const Matrix& points, std::size_t k, Metric metric, unsigned threads) {
    const std::size_t n = points.rows();
    if (n <= k) {
        throw Error(ErrorKind::InsufficientData,
                    "knn_graph needs more than k=" + std::to_string(k) + " points, got " + std::to_string(n));
    }
    const Matrix prepared = metric == Metric::cosine ? unit_rows(points) : points;
    KnnGraph g;
    g.n = n;
    g.k = k;
    g.neighbor_ids.resize(n * k);
    g.distances.resize(n * k);
    detail::parallel_for(n, threads, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(n - 1);
        const auto xi = prepared.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d = 0.0;
            if (metric == Metric::cosine) {
                d = std::max(0.0, 1.0 - std::clamp(dot(xi, prepared.row(j)), -1.0, 1.0));
            } else {
                d = std::sqrt(squared_euclidean(xi, prepared.row(j)));
            }
            cand.emplace_back(d, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t m = 0; m < k; ++m) {
            g.distances[i * k + m] = cand[m].first;
            g.neighbor_ids[i * k + m] = cand[m].second;
        }
    });
    return g;
}

SmoothKnn smooth_knn(std::span<const double> d) {
    const std::size_t k = d.size();
    if (k < 2) throw Error(ErrorKind::InsufficientData, "smooth_knn needs at least 2 distances");
    SmoothKnn out;
    for (double x : d) {
        if (x > 0.0) {
            out.rho = x;
            break;
        }
    }
    const double target = std::log2(static_cast<double>(k));
    auto total = [&](double sigma) {
        double s = 0.0;
        for (double x : d) s += std::exp(-std::max(0.0, x - out.rho) / sigma);
        return s;
    };
    double lo = 1e-6;
    double hi = 1e4;
    const double f_lo = total(lo);
    const double f_hi = total(hi);
    if (f_lo > target) {
        out.sigma = lo;
        out.unattainable = true;
    } else if (f_hi < target) {
        out.sigma = hi;
        out.unattainable = true;
    } else {
        for (int step = 0; step < 64; ++step) {
            const double mid = 0.5 * (lo + hi);
            if (total(mid) > target) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.sigma = 0.5 * (lo + hi);
    }
    out.memberships.reserve(k);
    for (double x : d) out.memberships.push_back(std::exp(-std::max(0.0, x - out.rho) / out.sigma));
    return out;
}

double FuzzySimplicialSet::weight(std::size_t i, std::size_t j) const {
    const auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{i, j},
                                     [](const WeightedEdge& e, const std::pair<std::size_t, std::size_t>& key) {
                                         return std::pair{e.i, e.j} < key;
                                     });
    if (it != entries.end() && it->i == i && it->j == j) return it->weight;
    return 0.0;
}

FuzzySimplicialSet fuzzy_union(std::size_t n, const std::vector<WeightedEdge>& directed) {
    // Gather both orientations of every edge, keyed by the unordered pair.
    struct Pair {
        std::size_t lo, hi;
        double forward, backward; // weight lo->hi and hi->lo
    };
    std::vector<Pair> pairs;
    pairs.reserve(directed.size());
    for (const auto& e : directed) {
        if (e.i >= n || e.j >= n) throw Error(ErrorKind::DimensionMismatch, "edge index out of range");
        if (e.weight < 0.0 || e.weight > 1.0) throw Error(ErrorKind::InputFormat, "membership outside [0, 1]");
        if (e.i == e.j) continue;
        if (e.i < e.j) {
            pairs.push_back({e.i, e.j, e.weight, 0.0});
        } else {
            pairs.push_back({e.j, e.i, 0.0, e.weight});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi);
    });
    FuzzySimplicialSet out;
    out.n = n;
    for (std::size_t p = 0; p < pairs.size();) {
        double a = 0.0;
        double b = 0.0;
        std::size_t q = p;
        for (; q < pairs.size() && pairs[q].lo == pairs[p].lo && pairs[q].hi == pairs[p].hi; ++q) {
            a = std::max(a, pairs[q].forward);
            b = std::max(b, pairs[q].backward);
        }
        const double w = a + b - a * b;
        if (w > 0.0) {
            out.entries.push_back({pairs[p].lo, pairs[p].hi, w});
            out.entries.push_back({pairs[p].hi, pairs[p].lo, w});
        }
        p = q;
    }
    std::sort(out.entries.begin(), out.entries.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
        return std::tie(x.i, x.j) < std::tie(y.i, y.j);
    });
    return out;
}

FuzzySimplicialSet fuzzy_simplicial_set(const KnnGraph& graph) {
    std::vector<WeightedEdge> directed;
    directed.reserve(graph.n * graph.k);
    std::vector<double> rho(graph.n);
    std::vector<double> sigma(graph.n);
    for (std::size_t i = 0; i < graph.n; ++i) {
        const auto row = smooth_knn(graph.dists(i));
        rho[i] = row.rho;
        sigma[i] = row.sigma;
        const auto ids = graph.ids(i);
        for (std::size_t m = 0; m < graph.k; ++m) directed.push_back({i, ids[m], row.memberships[m]});
    }
    auto out = fuzzy_union(graph.n, directed);
    out.rho = std::move(rho);
    out.sigma = std::move(sigma);
    return out;
}

CurveFit fit_ab(double min_dist, double spread) {
    if (!(spread > 0.0)) throw Error(ErrorKind::Config, "spread must be positive");
    constexpr std::size_t kGrid = 300;
    std::vector<double> xs(kGrid);
    std::vector<double> ys(kGrid);
    for (std::size_t i = 0; i < kGrid; ++i) {
        xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kGrid - 1);
        ys[i] = xs[i] <= min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }
    auto sse = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t i = 0; i < kGrid; ++i) {
            const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
            s += r * r;
        }
        return s;
    };

    // Levenberg-Marquardt on (a, b).
    double a = 1.0;
    double b = 1.0;
    double damping = 1e-3;
    double current = sse(a, b);
    bool converged = false;
    for (int iter = 0; iter < 1000 && !converged; ++iter) {
        double jtj[2][2] = {{0, 0}, {0, 0}};
        double jtr[2] = {0, 0};
        for (std::size_t i = 0; i < kGrid; ++i) {
            const double x = xs[i];
            const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
            const double denom = 1.0 + a * p;
            const double f = 1.0 / denom;
            const double r = f - ys[i];
            const double da = -p / (denom * denom);
            const double db = x > 0.0 ? -a * p * 2.0 * std::log(x) / (denom * denom) : 0.0;
            jtj[0][0] += da * da;
            jtj[0][1] += da * db;
            jtj[1][1] += db * db;
            jtr[0] += da * r;
            jtr[1] += db * r;
        }
        jtj[1][0] = jtj[0][1];
        bool improved = false;
        for (int tries = 0; tries < 50; ++tries) {
            const double m00 = jtj[0][0] * (1.0 + damping);
            const double m11 = jtj[1][1] * (1.0 + damping);
            const double det = m00 * m11 - jtj[0][1] * jtj[1][0];
            if (det == 0.0 || !std::isfinite(det)) {
                damping *= 10.0;
                continue;
            }
            const double step_a = -(m11 * jtr[0] - jtj[0][1] * jtr[1]) / det;
            const double step_b = -(m00 * jtr[1] - jtj[1][0] * jtr[0]) / det;
            const double na = a + step_a;
            const double nb = b + step_b;
            const double candidate = na > 0.0 && nb > 0.0 ? sse(na, nb) : INFINITY;
            if (candidate <= current) {
                const double rel = std::abs(current - candidate) / std::max(current, 1e-300);
                converged = rel < 1e-14 && std::abs(step_a) < 1e-10 * (1.0 + a) && std::abs(step_b) < 1e-10 * (1.0 + b);
                a = na;
                b = nb;
                current = candidate;
                damping = std::max(damping / 10.0, 1e-12);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if (!improved) converged = true; // no descent direction left: at a minimum
    }
    const double rms = std::sqrt(current / static_cast<double>(kGrid));
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0 || !converged || rms > 5e-2) {
        throw Error(ErrorKind::FitDiverged, "curve fit for min_dist=" + std::to_string(min_dist) +
                                                ", spread=" + std::to_string(spread) + " did not converge");
    }
    return {a, b, rms};
}

double low_dim_kernel(double distance, double a, double b) {
    return 1.0 / (1.0 + a * std::pow(distance, 2.0 * b));
}

double attractive_grad_coeff(double dist_sq, double a, double b) {
    if (dist_sq <= 0.0) return 0.0;
    return -2.0 * a * b * std::pow(dist_sq, b - 1.0) / (1.0 + a * std::pow(dist_sq, b));
}

double repulsive_grad_coeff(double dist_sq, double a, double b, double smoothing) {
    return 2.0 * b / ((smoothing + dist_sq) * (1.0 + a * std::pow(dist_sq, b)));
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

} // namespace

Matrix random_init(std::size_t n, std::size_t n_components, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix m(n, n_components);
    for (auto& x : m.data()) x = -10.0 + 20.0 * uniform01(rng);
    return m;
}

LowDimLayout optimize_layout(const FuzzySimplicialSet& graph, const UmapParams& params, Matrix initial) {
    params.validate();
    if (graph.n == 0) throw Error(ErrorKind::InsufficientData, "optimize_layout on an empty graph");
    if (initial.rows() != graph.n || initial.cols() != params.n_components) {
        throw Error(ErrorKind::DimensionMismatch, "initial layout shape does not match the graph");
    }
    const auto curve = fit_ab(params.min_dist, params.spread);
    const double a = curve.a;
    const double b = curve.b;
    const std::size_t dim = params.n_components;
    Matrix y = std::move(initial);

    double w_max = 0.0;
    for (const auto& e : graph.entries) w_max = std::max(w_max, e.weight);
    const auto n_epochs = static_cast<double>(params.n_epochs);

    struct Edge {
        std::size_t head, tail;
        double per_sample, per_negative, next_sample, next_negative;
    };
    std::vector<Edge> edges;
    for (const auto& e : graph.entries) {
        if (params.n_epochs > 0 && e.weight < w_max / n_epochs) continue;
        const double eps = w_max / e.weight;
        const double eps_neg = eps / static_cast<double>(params.negative_sample_rate);
        edges.push_back({e.i, e.j, eps, eps_neg, eps, eps_neg});
    }

    std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t epoch = 0; epoch < params.n_epochs; ++epoch) {
        const double t = static_cast<double>(epoch);
        const double alpha = params.learning_rate * (1.0 - t / n_epochs);
        for (auto& e : edges) {
            if (e.next_sample > t) continue;
            auto current = y.row(e.head);
            auto other = y.row(e.tail);
            const double d2 = squared_euclidean(current, other);
            const double attract = attractive_grad_coeff(d2, a, b);
            for (std::size_t d = 0; d < dim; ++d) {
                const double g = clip(attract * (current[d] - other[d]));
                current[d] += g * alpha;
                other[d] -= g * alpha;
            }
            e.next_sample += e.per_sample;

            const auto n_neg = static_cast<std::size_t>((t - e.next_negative) / e.per_negative);
            for (std::size_t p = 0; p < n_neg; ++p) {
                const std::size_t k = static_cast<std::size_t>(rng() % graph.n);
                if (k == e.head) continue;
                const auto neg = y.row(k);
                const double nd2 = squared_euclidean(current, neg);
                if (nd2 <= 0.0) continue;
                const double repulse = repulsive_grad_coeff(nd2, a, b, 0.001);
                for (std::size_t d = 0; d < dim; ++d) current[d] += clip(repulse * (current[d] - neg[d])) * alpha;
            }
            e.next_negative += static_cast<double>(n_neg) * e.per_negative;
        }
    }
    for (double v : y.data()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::FitDiverged, "layout optimization produced a non-finite value");
    }
    return LowDimLayout{std::move(y), params.to_json(), params.seed};
}

LowDimLayout optimize_layout(const FuzzySimplicialSet& graph, const UmapParams& params) {
    return optimize_layout(graph, params, random_init(graph.n, params.n_components, params.seed));
}

LowDimLayout reduce(const Matrix& embeddings, const UmapParams& params) {
    params.validate();
    if (embeddings.rows() <= params.n_neighbors) {
        throw Error(ErrorKind::InsufficientData, "UMAP needs more than n_neighbors=" +
                                                     std::to_string(params.n_neighbors) + " points, got " +
                                                     std::to_string(embeddings.rows()));
    }
    const auto graph = knn_graph(embeddings, params.n_neighbors, params.metric);
    return optimize_layout(fuzzy_simplicial_set(graph), params);
}

void save_layout(const LowDimLayout& layout, const std::filesystem::path& path) {
    const auto data = layout.coords.data();
    std::vector<float> values(data.begin(), data.end());
    write_matrix_file(path, MatrixFile{layout.coords.rows(), layout.coords.cols(), std::move(values),
                                       json{{"params", layout.params}, {"seed", layout.seed}}});
}

LowDimLayout load_layout(const std::filesystem::path& path) {
    auto file = read_matrix_file(path);
    LowDimLayout layout;
    layout.coords = Matrix(file.rows, file.cols, std::vector<double>(file.data.begin(), file.data.end()));
    layout.params = file.sidecar.value("params", json::object());
    layout.seed = file.sidecar.value("seed", std::uint64_t{0});
    return layout;
}

} // namespace topicforge

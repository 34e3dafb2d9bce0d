#include "topicforge/pca.hpp"

#include <cmath>
#include <random>

#include "topicforge/errors.hpp"

namespace topicforge {

namespace {

// Computes C v = X^T X v / (n - 1) without forming the covariance matrix.
std::vector<double> covariance_times(const Matrix& centered, const std::vector<double>& v) {
    const std::size_t n = centered.rows();
    std::vector<double> out(centered.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = centered.row(i);
        const double proj = dot(r, v);
        for (std::size_t j = 0; j < r.size(); ++j) out[j] += proj * r[j];
    }
    for (auto& x : out) x /= static_cast<double>(n - 1);
    return out;
}

void orthogonalize(std::vector<double>& v, const Matrix& basis, std::size_t count) {
    for (std::size_t c = 0; c < count; ++c) {
        const auto u = basis.row(c);
        const double p = dot(v, u);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= p * u[j];
    }
}

bool normalize(std::vector<double>& v) {
    const double norm = std::sqrt(squared_norm(v));
    if (norm < 1e-300) return false;
    for (auto& x : v) x /= norm;
    return true;
}

} // namespace

PcaResult pca_reduce(const Matrix& data, std::size_t n_components) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) throw Error(ErrorKind::InsufficientData, "PCA needs at least 2 rows");
    if (n_components < 1 || n_components > d) {
        throw Error(ErrorKind::Config, "n_components must lie in [1, " + std::to_string(d) + "]");
    }
    PcaResult result;
    result.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) result.mean[j] += data(i, j);
    }
    for (auto& m : result.mean) m /= static_cast<double>(n);
    Matrix centered = data;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered(i, j) -= result.mean[j];
    }

    result.components = Matrix(n_components, d);
    std::mt19937_64 rng(0x5ca1ab1eULL);
    for (std::size_t c = 0; c < n_components; ++c) {
        std::vector<double> v(d);
        for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
        orthogonalize(v, result.components, c);
        normalize(v);
        for (int iter = 0; iter < 200; ++iter) {
            auto next = covariance_times(centered, v);
            orthogonalize(next, result.components, c);
            if (!normalize(next)) {
                // Remaining variance is zero; keep the current orthonormal direction.
                break;
            }
            double change = 0.0;
            for (std::size_t j = 0; j < d; ++j) change = std::max(change, std::abs(next[j] - v[j]));
            v = std::move(next);
            if (change < 1e-9) break;
        }
        std::size_t pivot = 0;
        for (std::size_t j = 1; j < d; ++j) {
            if (std::abs(v[j]) > std::abs(v[pivot])) pivot = j;
        }
        if (v[pivot] < 0.0) {
            for (auto& x : v) x = -x;
        }
        auto row = result.components.row(c);
        std::copy(v.begin(), v.end(), row.begin());
    }

    Matrix projection(n, n_components);
    result.variances.assign(n_components, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n_components; ++c) {
            const double p = dot(centered.row(i), result.components.row(c));
            projection(i, c) = p;
            result.variances[c] += p * p;
        }
    }
    for (auto& v : result.variances) v /= static_cast<double>(n - 1);
    result.layout = LowDimLayout{std::move(projection),
                                 nlohmann::json{{"method", "pca"}, {"n_components", n_components}}, 0};
    return result;
}

} // namespace topicforge

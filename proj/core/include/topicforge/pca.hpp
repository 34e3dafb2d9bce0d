#pragma once

#include <vector>

#include "topicforge/matrix.hpp"
#include "topicforge/umap.hpp"

namespace topicforge {

struct PcaResult {
    LowDimLayout layout;              ///< n x n_components projections of the centered data
    Matrix components;                ///< n_components x d, unit rows
    std::vector<double> mean;         ///< column means
    std::vector<double> variances;    ///< projection variance per component
};

/// Principal components by power iteration with deflation (200 iterations, tol 1e-9).
/// Each component's largest-magnitude loading is made positive.
PcaResult pca_reduce(const Matrix& data, std::size_t n_components);

} // namespace topicforge

#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "topicforge/errors.hpp"
#include "topicforge/pca.hpp"

using namespace topicforge;

TEST(Pca, ExactOneDimensionalSubspace) {
    Matrix m(20, 3);
    for (std::size_t i = 0; i < 20; ++i) {
        const double t = static_cast<double>(i) - 7.5;
        m(i, 0) = 1.0 + 2.0 * t;
        m(i, 1) = -3.0 - t;
        m(i, 2) = 0.5 + 0.5 * t;
    }
    const auto r = pca_reduce(m, 1);
    double err = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double rec = r.mean[c] + r.layout.coords(i, 0) * r.components(0, c);
            err = std::max(err, std::abs(rec - m(i, c)));
        }
    }
    EXPECT_LE(err, 1e-9);
}

TEST(Pca, VariancesOrdered) {
    auto m = testsupport::random_matrix(200, 6, 4);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        m(i, 0) *= 5.0;
        m(i, 3) *= 2.0;
    }
    const auto r = pca_reduce(m, 4);
    for (std::size_t c = 1; c < r.variances.size(); ++c) EXPECT_GE(r.variances[c - 1], r.variances[c]);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            EXPECT_NEAR(dot(r.components.row(a), r.components.row(b)), a == b ? 1.0 : 0.0, 1e-6);
        }
    }
}

TEST(Pca, PlusMinusOneOnXAxis) {
    Matrix m(2, 2, {1, 0, -1, 0});
    const auto r = pca_reduce(m, 1);
    EXPECT_NEAR(r.components(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(r.components(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(r.layout.coords(0, 0), 1.0, 1e-12);
}

TEST(Pca, SignRuleAndDeterminism) {
    const auto m = testsupport::random_matrix(50, 5, 9);
    const auto a = pca_reduce(m, 2);
    EXPECT_EQ(a.layout.coords, pca_reduce(m, 2).layout.coords);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto row = a.components.row(c);
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j) {
            if (std::abs(row[j]) > std::abs(row[best])) best = j;
        }
        EXPECT_GT(row[best], 0.0);
    }
}

TEST(Pca, NeedsTwoRows) { EXPECT_THROW(pca_reduce(Matrix(1, 3), 1), Error); }

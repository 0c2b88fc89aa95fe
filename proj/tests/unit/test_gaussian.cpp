#include <cmath>

#include <gtest/gtest.h>

#include "mifs/gaussian.hpp"

using namespace mifs;

namespace {

// Determinant by partial-pivot Gaussian elimination, independent of Eigen.
double det(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double d = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) {
                p = r;
            }
        }
        if (p != c) {
            std::swap(a[p], a[c]);
            d = -d;
        }
        d *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    return d;
}

std::vector<std::vector<double>> block(const Eigen::MatrixXd& s, Eigen::Index r0, Eigen::Index c0, Eigen::Index n) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s(r0 + i, c0 + j);
        }
    }
    return out;
}

double oracle_mi(const GaussianSpec& g) {
    const auto n = static_cast<Eigen::Index>(g.n), m = static_cast<Eigen::Index>(g.m);
    return 0.5 * std::log(det(block(g.sigma, 0, 0, n)) * det(block(g.sigma, n, n, m)) / det(block(g.sigma, 0, 0, n + m)));
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST(GaussianTruth, ScalarHalf) {
    const double expect = 0.5 * std::log(1.0 / (1.0 - 0.25));
    EXPECT_NEAR(true_mi_scalar(0.5), expect, 1e-15);
    EXPECT_NEAR(expect, 0.14384, 5e-6);
    EXPECT_NEAR(true_mi_gaussian(correlated_pair(1, 0.5)), expect, 1e-12);
}

TEST(GaussianTruth, Isotropic2dHalf) {
    const double expect = std::log(4.0 / 3.0);
    EXPECT_NEAR(true_mi_isotropic_2d(0.5), expect, 1e-15);
    EXPECT_NEAR(expect, 0.28768, 5e-6);
    EXPECT_NEAR(true_mi_gaussian(correlated_pair(2, 0.5)), expect, 1e-12);
}

TEST(GaussianTruth, IndependentBlocksGiveExactZero) {
    GaussianSpec g;
    g.n = 2;
    g.m = 3;
    g.sigma = Eigen::MatrixXd::Zero(5, 5);
    g.sigma.topLeftCorner(2, 2) << 2.0, 0.3, 0.3, 1.0;
    g.sigma.bottomRightCorner(3, 3) << 1.0, 0.2, 0.1, 0.2, 3.0, 0.4, 0.1, 0.4, 2.0;
    EXPECT_EQ(true_mi_gaussian(g), 0.0);
    EXPECT_EQ(true_mi_gaussian(correlated_pair(1, 0.0)), 0.0);
}

TEST(GaussianTruth, GeneralFormulaMatchesOracleAndIsSymmetric) {
    Rng r(99);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 3, m = 1 + (trial / 3) % 3, d = n + m;
        Eigen::MatrixXd a(d, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) {
                a(i, j) = r.uniform(-1, 1);
            }
        }
        GaussianSpec g;
        g.n = static_cast<std::size_t>(n);
        g.m = static_cast<std::size_t>(m);
        g.sigma = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
        const double mi = true_mi_gaussian(g);
        EXPECT_NEAR(mi, oracle_mi(g), 1e-10);
        EXPECT_GE(mi, 0.0);
        // swap X and Y blocks
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < m; ++i) {
            p(i, n + i) = 1;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            p(m + i, i) = 1;
        }
        GaussianSpec s;
        s.n = g.m;
        s.m = g.n;
        s.sigma = p * g.sigma * p.transpose();
        EXPECT_NEAR(true_mi_gaussian(s), mi, 1e-12);
    }
}

TEST(GaussianTruth, ReducedFormsAgreeOverGrid) {
    for (double rho = -0.99; rho < 0.995; rho += 0.01) {
        EXPECT_NEAR(true_mi_gaussian(correlated_pair(1, rho)), true_mi_scalar(rho), 1e-12) << rho;
        EXPECT_NEAR(true_mi_gaussian(correlated_pair(2, rho)), true_mi_isotropic_2d(rho), 1e-12) << rho;
        EXPECT_LE(true_mi_scalar(rho), true_mi_isotropic_2d(rho) + 1e-12);
    }
}

TEST(GaussianTruth, Errors) {
    EXPECT_THROW(true_mi_scalar(1.0), domain_error);
    EXPECT_THROW(true_mi_isotropic_2d(-1.0), domain_error);
    GaussianSpec g = correlated_pair(1, 0.5);
    g.sigma(0, 1) = g.sigma(1, 0) = 2.0; // not positive definite
    EXPECT_THROW(true_mi_gaussian(g), domain_error);
    g.sigma(0, 1) = 0.1;
    EXPECT_THROW(true_mi_gaussian(g), domain_error); // asymmetric
    g = correlated_pair(1, 0.5);
    g.m = 2;
    EXPECT_THROW(true_mi_gaussian(g), domain_error);
}

TEST(GaussianSampling, DeterministicPerSeed) {
    const auto a = sample_gaussian(correlated_pair(2, 0.4, 5), 1000);
    const auto b = sample_gaussian(correlated_pair(2, 0.4, 5), 1000);
    const auto c = sample_gaussian(correlated_pair(2, 0.4, 6), 1000);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NE(a.x, c.x);
    EXPECT_THROW(sample_gaussian(correlated_pair(1, 0.4), 0), domain_error);
}

TEST(GaussianSampling, IndependentPairIsUncorrelated) {
    const std::size_t n = 1000000;
    const auto s = sample_gaussian(correlated_pair(1, 0.0, 17), n);
    EXPECT_LT(std::abs(correlation(s.x, s.y)), std::min(0.01, 3.0 / std::sqrt(static_cast<double>(n))));
}

TEST(GaussianSampling, StrongCorrelationRecovered) {
    const auto s = sample_gaussian(correlated_pair(1, 0.9, 18), 100000);
    const double r = correlation(s.x, s.y);
    EXPECT_GE(r, 0.88);
    EXPECT_LE(r, 0.92);
}

TEST(GaussianValidation, SmallGridProperties) {
    ValidationConfig cfg;
    cfg.rhos = {0.0, 0.6, 0.9};
    cfg.ks = {2, 16};
    cfg.sample_count = 40000;
    cfg.repeats = 2;
    const auto recs = run_validation_1d(cfg);
    ASSERT_EQ(recs.size(), 3u * 2 * 2);
    for (const auto& r : recs) {
        EXPECT_EQ(r.mode, "1d");
        if (r.rho == 0.0) {
            EXPECT_LE(r.estimate_nats, 0.01);
        }
        EXPECT_LE(r.estimate_nats, r.true_mi_nats + 0.01);
        EXPECT_FALSE(r.true_full_nats.has_value());
    }
    // rho = 0.9: K = 16 at least K = 2 minus slack
    EXPECT_GE(recs[10].estimate_nats, recs[8].estimate_nats - 0.005);
    EXPECT_EQ(recs[10].k, 16u);
    EXPECT_EQ(recs[8].k, 2u);

    const auto again = run_validation_1d(cfg);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].estimate_nats, again[i].estimate_nats);
    }
}

TEST(GaussianValidation, TwoDimensionalRecordsCarryFullTruth) {
    ValidationConfig cfg;
    cfg.rhos = {0.0, 0.6};
    cfg.ks = {4};
    cfg.sample_count = 20000;
    cfg.repeats = 1;
    const auto recs = run_validation_2d(cfg);
    ASSERT_EQ(recs.size(), 2u);
    for (const auto& r : recs) {
        ASSERT_TRUE(r.true_full_nats.has_value());
        EXPECT_LE(r.true_mi_nats, *r.true_full_nats);
        EXPECT_LE(r.estimate_nats, r.true_mi_nats + 0.01);
    }
    EXPECT_LE(recs[0].estimate_nats, 0.01);
}

TEST(GaussianValidation, ConfigChecks) {
    ValidationConfig cfg;
    cfg.ks = {1};
    EXPECT_THROW(run_validation_1d(cfg), domain_error);
    cfg.ks = {4};
    cfg.rhos = {1.0};
    EXPECT_THROW(run_validation_1d(cfg), domain_error);
    cfg.rhos = {0.1};
    cfg.sample_count = 20;
    EXPECT_THROW(run_validation_1d(cfg), domain_error);
}

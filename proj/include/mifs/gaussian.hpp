#pragma once

// Jointly Gaussian pairs with closed-form mutual information, and the
// estimator validation experiments built on them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mifs/binning.hpp"
#include "mifs/error.hpp"
#include "mifs/kmeans.hpp"
#include "mifs/parallel.hpp"
#include "mifs/patch.hpp"
#include "mifs/plugin_mi.hpp"
#include "mifs/rng.hpp"

namespace mifs {

// Covariance of [X; Y] with X in R^n and Y in R^m, in block form
// [[S_X, S_XY], [S_YX, S_Y]].
struct GaussianSpec {
    std::size_t n = 1;
    std::size_t m = 1;
    Eigen::MatrixXd sigma;
    std::uint64_t seed = 0;

    void validate() const {
        const auto d = static_cast<Eigen::Index>(n + m);
        if (n == 0 || m == 0) {
            throw domain_error("Gaussian blocks must be non-empty");
        }
        if (sigma.rows() != d || sigma.cols() != d) {
            throw domain_error("covariance is " + std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()) +
                               ", expected " + std::to_string(d) + "x" + std::to_string(d));
        }
        if (!sigma.allFinite() || !sigma.isApprox(sigma.transpose(), 1e-12)) {
            throw domain_error("covariance is not symmetric");
        }
    }
};

// corr(X_i, Y_j) = delta_ij * rho with unit variances, X and Y of equal dimension.
inline GaussianSpec correlated_pair(std::size_t dim, double rho, std::uint64_t seed = 0) {
    GaussianSpec s;
    s.n = s.m = dim;
    s.seed = seed;
    const auto d = static_cast<Eigen::Index>(dim);
    s.sigma = Eigen::MatrixXd::Identity(2 * d, 2 * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        s.sigma(i, d + i) = rho;
        s.sigma(d + i, i) = rho;
    }
    return s;
}

namespace detail {
inline Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& a, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw domain_error(std::string(what) + " is not positive definite");
    }
    return llt.matrixL();
}

inline double log_det_spd(const Eigen::MatrixXd& a, const char* what) {
    const Eigen::MatrixXd l = cholesky_or_throw(a, what);
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        s += std::log(l(i, i));
    }
    return 2.0 * s;
}
} // namespace detail

// I(X;Y) = 1/2 log(det S_X det S_Y / det S), in nats.
inline double true_mi_gaussian(const GaussianSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n), m = static_cast<Eigen::Index>(spec.m);
    const double ld = detail::log_det_spd(spec.sigma, "covariance");
    const double lx = detail::log_det_spd(spec.sigma.topLeftCorner(n, n), "X covariance block");
    const double ly = detail::log_det_spd(spec.sigma.bottomRightCorner(m, m), "Y covariance block");
    return std::max(0.0, 0.5 * (lx + ly - ld));
}

inline void check_rho(double rho) {
    if (!(rho > -1.0 && rho < 1.0)) {
        throw domain_error("correlation must lie strictly inside (-1, 1), got " + std::to_string(rho));
    }
}

// Scalar pair: log sqrt(1 / (1 - rho^2)).
inline double true_mi_scalar(double rho) {
    check_rho(rho);
    return -0.5 * std::log1p(-rho * rho);
}

// Isotropic 2-D pair: log sqrt(1 / (1 - rho^2)^2).
inline double true_mi_isotropic_2d(double rho) {
    check_rho(rho);
    return -std::log1p(-rho * rho);
}

struct GaussianSamples {
    std::size_t count = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> x; // count * n, sample-major
    std::vector<double> y; // count * m
};

// Draws z ~ N(0, I) and returns L z with S = L L^T.
inline GaussianSamples sample_gaussian(const GaussianSpec& spec, std::size_t count) {
    spec.validate();
    if (count == 0) {
        throw domain_error("sample count must be at least 1");
    }
    const Eigen::MatrixXd l = detail::cholesky_or_throw(spec.sigma, "covariance");
    const auto d = static_cast<Eigen::Index>(spec.n + spec.m);
    GaussianSamples out;
    out.count = count;
    out.n = spec.n;
    out.m = spec.m;
    out.x.resize(count * spec.n);
    out.y.resize(count * spec.m);
    Rng rng(spec.seed);
    Eigen::VectorXd z(d);
    for (std::size_t s = 0; s < count; ++s) {
        for (Eigen::Index i = 0; i < d; ++i) {
            z(i) = rng.normal();
        }
        const Eigen::VectorXd v = l.triangularView<Eigen::Lower>() * z;
        for (std::size_t i = 0; i < spec.n; ++i) {
            out.x[s * spec.n + i] = v(static_cast<Eigen::Index>(i));
        }
        for (std::size_t j = 0; j < spec.m; ++j) {
            out.y[s * spec.m + j] = v(static_cast<Eigen::Index>(spec.n + j));
        }
    }
    return out;
}

struct MIEstimateRecord {
    double rho = 0.0;
    std::size_t k = 0;
    std::size_t sample_count = 0;
    std::size_t repeat = 0;
    double estimate_nats = 0.0;
    double true_mi_nats = 0.0;               // scalar (patched) truth
    std::optional<double> true_full_nats;    // 2-D truth, 2-D experiment only
    std::string mode;                        // "1d" or "2d"
};

struct ValidationConfig {
    std::vector<double> rhos{0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9};
    std::vector<std::size_t> ks{2, 4, 8, 16, 32};
    std::size_t sample_count = 400000;
    std::size_t repeats = 5;
    // X is a continuous scalar here, so it is binned more finely than the
    // multi-dimensional feature patches of the importance estimator.
    std::size_t bins = 32;
    std::uint64_t seed = 20230401;
    std::size_t max_iters = 300;
    double tol = 1e-6;
};

namespace detail {

inline void check_validation_config(const ValidationConfig& cfg) {
    if (cfg.ks.empty() || cfg.rhos.empty()) {
        throw domain_error("validation grid is empty");
    }
    for (double r : cfg.rhos) {
        check_rho(r);
    }
    for (std::size_t k : cfg.ks) {
        if (k < 2) {
            throw domain_error("each K must be at least 2");
        }
        if (cfg.sample_count < 10 * k) {
            throw domain_error("sample count " + std::to_string(cfg.sample_count) + " is below 10*K for K = " +
                               std::to_string(k));
        }
    }
    if (cfg.repeats == 0) {
        throw domain_error("at least one repeat is required");
    }
}

inline PatchSet scalar_patches(const std::vector<double>& values) {
    PatchSet ps;
    ps.side = 1;
    ps.length = 1;
    ps.data.assign(values.begin(), values.end());
    ps.origins.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        ps.origins[i].sample = static_cast<std::uint32_t>(i);
    }
    return ps;
}

// For each rho the samples are drawn once from stream (seed, "samples", rho
// index); clustering for (K, repeat) uses stream (seed, "kmeans", rho index,
// K index, repeat). The repeats therefore vary only the clustering seed.
inline std::vector<MIEstimateRecord> run_validation(const ValidationConfig& cfg, bool two_d) {
    check_validation_config(cfg);
    const std::size_t grid = cfg.ks.size() * cfg.repeats;
    std::vector<MIEstimateRecord> records(cfg.rhos.size() * grid);
    for (std::size_t ri = 0; ri < cfg.rhos.size(); ++ri) {
        const double rho = cfg.rhos[ri];
        const std::size_t dim = two_d ? 2 : 1;
        auto spec = correlated_pair(dim, rho, derive_seed(cfg.seed, {1, ri}));
        const auto samples = sample_gaussian(spec, cfg.sample_count);
        // component-wise split: X_1 samples followed by X_2 samples (same for Y)
        std::vector<double> xs, ys;
        xs.reserve(samples.count * dim);
        ys.reserve(samples.count * dim);
        for (std::size_t c = 0; c < dim; ++c) {
            for (std::size_t s = 0; s < samples.count; ++s) {
                xs.push_back(samples.x[s * dim + c]);
                ys.push_back(samples.y[s * dim + c]);
            }
        }
        const PatchSet xp = scalar_patches(xs), yp = scalar_patches(ys);
        const auto xbins = bin_patches(xp, BinningConfig{cfg.bins, std::nullopt, false});
        parallel_for(grid, [&](std::size_t g) {
            const std::size_t ki = g / cfg.repeats, rep = g % cfg.repeats;
            KMeansOptions opt{cfg.ks[ki], derive_seed(cfg.seed, {2, ri, ki, rep}), cfg.max_iters, cfg.tol};
            const auto model = kmeans(yp, opt);
            MIEstimateRecord& r = records[ri * grid + g];
            r.rho = rho;
            r.k = cfg.ks[ki];
            r.sample_count = cfg.sample_count;
            r.repeat = rep;
            r.estimate_nats = plugin_mi(xbins.symbols, model.labels);
            r.true_mi_nats = true_mi_scalar(rho);
            if (two_d) {
                r.true_full_nats = true_mi_isotropic_2d(rho);
            }
            r.mode = two_d ? "2d" : "1d";
        });
    }
    return records;
}

} // namespace detail

// Scalar pair, Y clustered into K groups, X binned; one record per (rho, K, repeat).
inline std::vector<MIEstimateRecord> run_validation_1d(const ValidationConfig& cfg) {
    return detail::run_validation(cfg, false);
}

// Isotropic 2-D pair split component-wise into patched scalars; the patched
// pool holds 2 * sample_count values.
inline std::vector<MIEstimateRecord> run_validation_2d(const ValidationConfig& cfg) {
    return detail::run_validation(cfg, true);
}

} // namespace mifs

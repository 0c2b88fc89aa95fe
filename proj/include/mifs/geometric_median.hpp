#pragma once

// Weiszfeld iteration for the geometric median of points in R^d.
//
// Starts from the centroid. When the iterate coincides with data points
// (distance <= 1e-12 * (1 + |y|)), the optimality test of Kuhn is applied:
// with R the sum of unit vectors from y towards the remaining points, y is the
// median if |R| <= number of coincident points. Otherwise y is shifted by
// eps = 1e-6 * (1 + |y|) along R/|R| and iteration continues.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"

namespace mifs {

struct WeiszfeldResult {
    std::vector<double> median;
    std::size_t iterations = 0;
    std::size_t perturbations = 0;
    bool converged = false;
};

namespace detail {
inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}
} // namespace detail

inline WeiszfeldResult geometric_median(std::span<const double> points, std::size_t dim, double tol = 1e-9,
                                        std::size_t max_iters = 1000) {
    if (dim == 0 || points.empty() || points.size() % dim != 0) {
        throw domain_error("geometric_median: points must form a non-empty n x dim array");
    }
    const std::size_t n = points.size() / dim;
    WeiszfeldResult res;
    std::vector<double> y(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < dim; ++d) {
            y[d] += points[i * dim + d];
        }
    }
    for (double& v : y) {
        v /= static_cast<double>(n);
    }
    std::vector<double> dist(n), num(dim), r(dim);
    while (res.iterations < max_iters) {
        ++res.iterations;
        const double scale = 1.0 + detail::norm2(y);
        std::size_t coincident = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = points[i * dim + d] - y[d];
                s += diff * diff;
            }
            dist[i] = std::sqrt(s);
            if (dist[i] <= 1e-12 * scale) {
                ++coincident;
            }
        }
        if (coincident > 0) {
            std::fill(r.begin(), r.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] > 1e-12 * scale) {
                    for (std::size_t d = 0; d < dim; ++d) {
                        r[d] += (points[i * dim + d] - y[d]) / dist[i];
                    }
                }
            }
            const double rn = detail::norm2(r);
            if (rn <= static_cast<double>(coincident)) {
                res.converged = true;
                break;
            }
            const double eps = 1e-6 * scale;
            for (std::size_t d = 0; d < dim; ++d) {
                y[d] += eps * r[d] / rn;
            }
            ++res.perturbations;
            continue;
        }
        std::fill(num.begin(), num.end(), 0.0);
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 1.0 / dist[i];
            den += w;
            for (std::size_t d = 0; d < dim; ++d) {
                num[d] += w * points[i * dim + d];
            }
        }
        double moved = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double next = num[d] / den;
            moved += (next - y[d]) * (next - y[d]);
            y[d] = next;
        }
        if (std::sqrt(moved) <= tol * std::max(1.0, detail::norm2(y))) {
            res.converged = true;
            break;
        }
    }
    res.median = std::move(y);
    return res;
}

} // namespace mifs

#pragma once

// Lloyd's K-means with k-means++ seeding.
//
// Assignment ties go to the lowest centroid index. A cluster that ends an
// update empty is re-seeded at the point farthest from its assigned centroid
// (lowest point index on ties; each point is used at most once per update).
// Iteration stops when no centroid moves by `tol` or more (Euclidean), or
// after `max_iters` updates; the returned labels are always recomputed
// against the returned centroids.
//
// One-dimensional data takes a sorted prefix-sum path whose cost per
// iteration is O(K log n) instead of O(nK). It computes the same assignment,
// ties included.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mifs/error.hpp"
#include "mifs/parallel.hpp"
#include "mifs/patch.hpp"
#include "mifs/rng.hpp"

namespace mifs {

struct KMeansOptions {
    std::size_t k = 8;
    std::uint64_t seed = 0;
    std::size_t max_iters = 300;
    double tol = 1e-6;
};

struct ClusterModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids; // k * dim
    std::vector<std::uint32_t> labels;
    double inertia = 0.0;
    std::vector<double> inertia_trace; // inertia after every assignment step
    std::size_t iterations = 0;
    std::size_t reseeds = 0;
    bool converged = false;
    std::uint64_t seed = 0;

    std::span<const double> centroid(std::size_t i) const { return {centroids.data() + i * dim, dim}; }
};

namespace detail {

inline constexpr std::size_t kKMeansChunk = 8192;

inline double squared_distance(const float* x, const double* c, std::size_t dim) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
        const double diff = static_cast<double>(x[d]) - c[d];
        s += diff * diff;
    }
    return s;
}

inline std::vector<double> kmeanspp_init(std::span<const float> data, std::size_t n, std::size_t dim, std::size_t k,
                                         Rng& rng) {
    std::vector<double> centroids(k * dim);
    std::vector<char> chosen(n, 0);
    auto take = [&](std::size_t t, std::size_t i) {
        chosen[i] = 1;
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[t * dim + d] = data[i * dim + d];
        }
    };
    take(0, rng.index(n));
    std::vector<double> d2(n);
    parallel_chunks(n, kKMeansChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            d2[i] = squared_distance(&data[i * dim], centroids.data(), dim);
        }
    });
    for (std::size_t t = 1; t < k; ++t) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) {
                    continue;
                }
                cum += d2[i];
                pick = i;
                if (cum > target) {
                    break;
                }
            }
        } else {
            // every point coincides with a chosen centre
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) {
                    pick = i;
                }
            }
        }
        take(t, pick);
        const double* c = &centroids[t * dim];
        parallel_chunks(n, kKMeansChunk, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                d2[i] = std::min(d2[i], squared_distance(&data[i * dim], c, dim));
            }
        });
    }
    return centroids;
}

// Picks re-seed points for empty clusters; `dist` is each point's squared
// distance to its assigned centroid and is consumed (set to -1) on use.
inline void reseed_empty(std::vector<double>& centroids, const std::vector<std::size_t>& counts,
                         std::vector<double>& dist, std::span<const float> data, std::size_t dim,
                         std::size_t& reseeds) {
    const std::size_t k = counts.size();
    for (std::size_t t = 0; t < k; ++t) {
        if (counts[t] != 0) {
            continue;
        }
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            if (dist[i] > best_d) {
                best_d = dist[i];
                best = i;
            }
        }
        if (best_d < 0.0) {
            break;
        }
        dist[best] = -1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            centroids[t * dim + d] = data[best * dim + d];
        }
        ++reseeds;
    }
}

inline double max_movement(const std::vector<double>& a, const std::vector<double>& b, std::size_t dim) {
    double worst = 0.0;
    for (std::size_t t = 0; t * dim < a.size(); ++t) {
        double s = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = a[t * dim + d] - b[t * dim + d];
            s += diff * diff;
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

class GenericLloyd {
  public:
    GenericLloyd(std::span<const float> data, std::size_t n, std::size_t dim, std::size_t k)
        : data_(data), n_(n), dim_(dim), k_(k), dist_(n) {}

    double assign(const std::vector<double>& centroids, std::vector<std::uint32_t>& labels) {
        const std::size_t chunks = chunk_count(n_, kKMeansChunk);
        std::vector<double> partial(chunks, 0.0);
        parallel_chunks(n_, kKMeansChunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
            double acc = 0.0;
            for (std::size_t i = b; i < e; ++i) {
                const float* x = &data_[i * dim_];
                double best = std::numeric_limits<double>::infinity();
                std::uint32_t arg = 0;
                for (std::size_t t = 0; t < k_; ++t) {
                    const double d = squared_distance(x, &centroids[t * dim_], dim_);
                    if (d < best) {
                        best = d;
                        arg = static_cast<std::uint32_t>(t);
                    }
                }
                labels[i] = arg;
                dist_[i] = best;
                acc += best;
            }
            partial[ci] = acc;
        });
        return std::accumulate(partial.begin(), partial.end(), 0.0);
    }

    std::vector<double> update(const std::vector<double>& centroids, const std::vector<std::uint32_t>& labels,
                               std::size_t& reseeds) {
        const std::size_t chunks = chunk_count(n_, kKMeansChunk);
        std::vector<std::vector<double>> sums(chunks);
        std::vector<std::vector<std::size_t>> counts(chunks);
        parallel_chunks(n_, kKMeansChunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
            auto& s = sums[ci];
            auto& c = counts[ci];
            s.assign(k_ * dim_, 0.0);
            c.assign(k_, 0);
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t t = labels[i];
                ++c[t];
                for (std::size_t d = 0; d < dim_; ++d) {
                    s[t * dim_ + d] += data_[i * dim_ + d];
                }
            }
        });
        std::vector<double> total(k_ * dim_, 0.0);
        std::vector<std::size_t> count(k_, 0);
        for (std::size_t ci = 0; ci < chunks; ++ci) {
            for (std::size_t j = 0; j < total.size(); ++j) {
                total[j] += sums[ci][j];
            }
            for (std::size_t t = 0; t < k_; ++t) {
                count[t] += counts[ci][t];
            }
        }
        std::vector<double> next = centroids;
        for (std::size_t t = 0; t < k_; ++t) {
            if (count[t] == 0) {
                continue;
            }
            for (std::size_t d = 0; d < dim_; ++d) {
                next[t * dim_ + d] = total[t * dim_ + d] / static_cast<double>(count[t]);
            }
        }
        reseed_empty(next, count, dist_, data_, dim_, reseeds);
        return next;
    }

  private:
    std::span<const float> data_;
    std::size_t n_, dim_, k_;
    std::vector<double> dist_;
};

class SortedLloyd1D {
  public:
    SortedLloyd1D(std::span<const float> data, std::size_t k) : data_(data), k_(k), order_(data.size()) {
        const std::size_t n = data.size();
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });
        xs_.resize(n);
        s1_.assign(n + 1, 0.0);
        s2_.assign(n + 1, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            const double v = data[order_[p]];
            xs_[p] = v;
            s1_[p + 1] = s1_[p] + v;
            s2_[p + 1] = s2_[p] + v * v;
        }
    }

    double assign(const std::vector<double>& centroids, std::vector<std::uint32_t>&) {
        segment(centroids);
        double inertia = 0.0;
        for (std::size_t t = 0; t < k_; ++t) {
            const std::size_t b = begin_[t], e = end_[t];
            if (b == e) {
                continue;
            }
            const double c = centroids[t];
            const double cnt = static_cast<double>(e - b);
            const double sx = s1_[e] - s1_[b], sxx = s2_[e] - s2_[b];
            inertia += std::max(0.0, sxx - 2.0 * c * sx + cnt * c * c);
        }
        return inertia;
    }

    // Labels follow the segments of the last assign; only written on request.
    void write_labels(std::vector<std::uint32_t>& labels) const {
        for (std::size_t t = 0; t < k_; ++t) {
            for (std::size_t p = begin_[t]; p < end_[t]; ++p) {
                labels[order_[p]] = static_cast<std::uint32_t>(t);
            }
        }
    }

    std::vector<double> update(const std::vector<double>& centroids, const std::vector<std::uint32_t>&,
                               std::size_t& reseeds) {
        std::vector<double> next = centroids;
        std::vector<std::size_t> count(k_, 0);
        for (std::size_t t = 0; t < k_; ++t) {
            count[t] = end_[t] - begin_[t];
            if (count[t] != 0) {
                next[t] = (s1_[end_[t]] - s1_[begin_[t]]) / static_cast<double>(count[t]);
            }
        }
        if (std::find(count.begin(), count.end(), std::size_t{0}) != count.end()) {
            std::vector<double> dist(data_.size());
            for (std::size_t t = 0; t < k_; ++t) {
                for (std::size_t p = begin_[t]; p < end_[t]; ++p) {
                    const double diff = xs_[p] - centroids[t];
                    dist[order_[p]] = diff * diff;
                }
            }
            reseed_empty(next, count, dist, data_, 1, reseeds);
        }
        return next;
    }

  private:
    // Contiguous range of sorted positions owned by each centroid.
    void segment(const std::vector<double>& centroids) {
        std::vector<std::size_t> rank(k_);
        std::iota(rank.begin(), rank.end(), std::size_t{0});
        std::stable_sort(rank.begin(), rank.end(),
                         [&](std::size_t a, std::size_t b) { return centroids[a] < centroids[b]; });
        begin_.assign(k_, 0);
        end_.assign(k_, 0);
        std::size_t pos = 0;
        for (std::size_t r = 0; r < k_; ++r) {
            const std::size_t t = rank[r];
            // duplicates of an earlier (lower-index) centroid own nothing
            if (r > 0 && centroids[t] == centroids[rank[r - 1]]) {
                begin_[t] = end_[t] = pos;
                continue;
            }
            std::size_t next_distinct = r + 1;
            while (next_distinct < k_ && centroids[rank[next_distinct]] == centroids[t]) {
                ++next_distinct;
            }
            std::size_t stop = xs_.size();
            if (next_distinct < k_) {
                // same comparison as the generic assignment, so midpoint ties
                // also go to the lower index
                const std::size_t u = rank[next_distinct];
                const double cl = centroids[t], cr = centroids[u];
                auto stays = [&](double x) {
                    const double dl = (x - cl) * (x - cl), dr = (x - cr) * (x - cr);
                    return !(dr < dl || (dr == dl && u < t));
                };
                stop = static_cast<std::size_t>(
                    std::partition_point(xs_.begin() + static_cast<std::ptrdiff_t>(pos), xs_.end(), stays) -
                    xs_.begin());
            }
            begin_[t] = pos;
            end_[t] = stop;
            pos = stop;
        }
    }

    std::span<const float> data_;
    std::size_t k_;
    std::vector<std::size_t> order_;
    std::vector<double> xs_, s1_, s2_;
    std::vector<std::size_t> begin_, end_;
};

template <typename Engine>
ClusterModel run_lloyd(Engine& engine, std::span<const float> data, std::size_t n, std::size_t dim,
                       const KMeansOptions& opt) {
    ClusterModel m;
    m.k = opt.k;
    m.dim = dim;
    m.seed = opt.seed;
    m.labels.assign(n, 0);
    Rng rng(opt.seed);
    m.centroids = kmeanspp_init(data, n, dim, opt.k, rng);
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        m.inertia_trace.push_back(engine.assign(m.centroids, m.labels));
        auto next = engine.update(m.centroids, m.labels, m.reseeds);
        const double moved = max_movement(next, m.centroids, dim);
        m.centroids = std::move(next);
        ++m.iterations;
        if (moved < opt.tol) {
            m.converged = true;
            break;
        }
    }
    m.inertia = engine.assign(m.centroids, m.labels);
    if constexpr (requires { engine.write_labels(m.labels); }) {
        engine.write_labels(m.labels);
    }
    m.inertia_trace.push_back(m.inertia);
    return m;
}

inline void check_kmeans_args(std::size_t n, std::size_t dim, const KMeansOptions& opt) {
    if (dim == 0) {
        throw domain_error("k-means needs points of positive dimension");
    }
    if (opt.k == 0) {
        throw domain_error("k-means needs K >= 1");
    }
    if (opt.k > n) {
        throw domain_error("K = " + std::to_string(opt.k) + " exceeds the number of points (" + std::to_string(n) + ")");
    }
}

// Always uses the O(nK) assignment, whatever the dimension. Exposed so the
// one-dimensional path can be checked against it.
inline ClusterModel kmeans_generic(std::span<const float> data, std::size_t dim, const KMeansOptions& opt) {
    const std::size_t n = dim == 0 ? 0 : data.size() / dim;
    check_kmeans_args(n, dim, opt);
    GenericLloyd engine(data, n, dim, opt.k);
    return run_lloyd(engine, data, n, dim, opt);
}

} // namespace detail

inline ClusterModel kmeans(std::span<const float> data, std::size_t dim, const KMeansOptions& opt) {
    if (dim != 1) {
        return detail::kmeans_generic(data, dim, opt);
    }
    detail::check_kmeans_args(data.size(), dim, opt);
    detail::SortedLloyd1D engine(data, opt.k);
    return detail::run_lloyd(engine, data, data.size(), 1, opt);
}

inline ClusterModel kmeans(const PatchSet& patches, const KMeansOptions& opt) {
    return kmeans(patches.data, patches.length, opt);
}

} // namespace mifs

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "mifs/importance.hpp"
#include "test_util.hpp"

using namespace mifs;

namespace {

// Feature and output at the same resolution; output = channel 0 exactly.
Dataset copy_dataset(std::size_t samples, std::size_t channels, std::uint64_t seed) {
    Dataset d;
    d.patch = {2, 2};
    d.task_ids = {0};
    Rng r(seed);
    for (std::size_t s = 0; s < samples; ++s) {
        Tensor f(channels, 8, 8);
        for (auto& v : f.values) {
            v = static_cast<float>(r.normal());
        }
        Tensor out(1, 8, 8);
        std::copy(f.values.begin(), f.values.begin() + 64, out.values.begin());
        d.features.push_back(std::move(f));
        d.outputs[0].push_back(std::move(out));
        d.sample_ids.push_back("s" + std::to_string(s));
    }
    d.validate();
    return d;
}

MIImportanceOptions small_opts() {
    MIImportanceOptions o;
    o.feature_side = 2;
    o.output_side = 2;
    o.k = 8;
    o.bins = 4;
    o.seed = 3;
    return o;
}

// Independent MI for one channel: exact bin tuples through a std::map, then
// map-based plug-in counts.
double oracle_channel_mi(const Dataset& d, std::size_t ch, const std::vector<std::uint32_t>& labels,
                         const MIImportanceOptions& o) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& t : d.features) {
        for (float v : t.channel(ch)) {
            lo = std::min(lo, static_cast<double>(v));
            hi = std::max(hi, static_cast<double>(v));
        }
    }
    std::map<std::vector<int>, int> ids;
    std::vector<int> xs;
    const std::size_t n = o.feature_side;
    for (const auto& t : d.features) {
        for (std::size_t r = 0; r < t.height / n; ++r) {
            for (std::size_t c = 0; c < t.width / n; ++c) {
                std::vector<int> tuple;
                for (std::size_t y = 0; y < n; ++y) {
                    for (std::size_t x = 0; x < n; ++x) {
                        const double v = t.at(ch, r * n + y, c * n + x);
                        int b = static_cast<int>(std::floor(static_cast<double>(o.bins) * (v - lo) / (hi - lo)));
                        tuple.push_back(std::clamp(b, 0, static_cast<int>(o.bins) - 1));
                    }
                }
                xs.push_back(ids.try_emplace(tuple, static_cast<int>(ids.size())).first->second);
            }
        }
    }
    std::map<int, double> px, py;
    std::map<std::pair<int, int>, double> pxy;
    const double total = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        px[xs[i]] += 1 / total;
        py[static_cast<int>(labels[i])] += 1 / total;
        pxy[{xs[i], static_cast<int>(labels[i])}] += 1 / total;
    }
    double mi = 0;
    for (const auto& [k, p] : pxy) {
        mi += p * std::log(p / (px[k.first] * py[k.second]));
    }
    return mi;
}

} // namespace

TEST(MIImportance, CopiedChannelRankedFirst) {
    const auto d = copy_dataset(40, 8, 1);
    const auto o = small_opts();
    const auto t = mi_importance(d, 0, o);
    EXPECT_EQ(t.criterion, Criterion::mi);
    EXPECT_EQ(t.task_id, 0);
    EXPECT_EQ(t.ordering.front(), 0);
    for (int c = 1; c < 8; ++c) {
        EXPECT_GT(t.score_of(0), t.score_of(c) + 0.5);
    }
    // brute-force oracle with the same cluster labels
    PatchSet out;
    for (std::size_t s = 0; s < d.sample_count(); ++s) {
        out.append(patchify_joint(d.outputs.at(0)[s], 2, static_cast<std::uint32_t>(s)));
    }
    const auto model = kmeans(out, KMeansOptions{o.k, o.seed, o.max_iters, o.tol});
    for (std::size_t ch : {std::size_t{0}, std::size_t{3}}) {
        EXPECT_NEAR(t.scores[ch], oracle_channel_mi(d, ch, model.labels, o), 1e-10);
    }
}

TEST(MIImportance, IdenticalChannelsTieByAscendingId) {
    auto d = copy_dataset(10, 5, 2);
    for (auto& f : d.features) {
        for (std::size_t c = 1; c < 5; ++c) {
            std::copy(f.values.begin(), f.values.begin() + 64, f.values.begin() + static_cast<long>(c * 64));
        }
        f.channel_ids = {40, 10, 30, 20, 0};
    }
    const auto t = mi_importance(d, 0, small_opts());
    for (double s : t.scores) {
        EXPECT_EQ(s, t.scores[0]);
    }
    EXPECT_EQ(t.ordering, (std::vector<int>{0, 10, 20, 30, 40}));
}

TEST(MIImportance, ScaledChannelKeepsScoreAndRank) {
    // Integer-valued features so the scaled values are exact in float.
    auto d = copy_dataset(30, 6, 3);
    for (auto& f : d.features) {
        for (auto& v : f.values) {
            v = std::round(v * 4.0f);
        }
    }
    for (std::size_t s = 0; s < d.sample_count(); ++s) {
        std::copy(d.features[s].values.begin(), d.features[s].values.begin() + 64, d.outputs[0][s].values.begin());
    }
    const auto a = mi_importance(d, 0, small_opts());
    auto scaled = d;
    for (auto& f : scaled.features) {
        for (auto& v : f.channel(2)) {
            v *= 10.0f;
        }
    }
    const auto b = mi_importance(scaled, 0, small_opts());
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.ordering, b.ordering);
}

TEST(MIImportance, PatchGridMismatchRejected) {
    auto d = copy_dataset(3, 2, 4);
    auto o = small_opts();
    o.output_side = 4; // output grid 2x2 vs feature grid 4x4
    EXPECT_THROW(mi_importance(d, 0, o), dimension_error);
    EXPECT_THROW(mi_importance(d, 5, small_opts()), domain_error);
}

TEST(NormImportance, ConstantChannelClosedForm) {
    Dataset d;
    d.patch = {1, 1};
    for (int s = 0; s < 3; ++s) {
        Tensor f(3, 4, 6);
        std::fill(f.values.begin(), f.values.begin() + 24, 2.5f);
        std::fill(f.values.begin() + 24, f.values.begin() + 48, -1.0f);
        d.features.push_back(f);
    }
    const auto l2 = norm_importance(d, 2);
    const auto l1 = norm_importance(d, 1);
    EXPECT_NEAR(l2.score_of(0), 2.5 * std::sqrt(24.0), 1e-12);
    EXPECT_NEAR(l2.score_of(1), std::sqrt(24.0), 1e-12);
    EXPECT_EQ(l2.score_of(2), 0.0);
    EXPECT_EQ(l2.ordering.back(), 2);
    EXPECT_NEAR(l1.score_of(0), 2.5 * 24, 1e-12);
    EXPECT_THROW(norm_importance(d, 3), domain_error);
}

TEST(NormImportance, HomogeneityAndRankFlip) {
    auto d = copy_dataset(5, 4, 6);
    const auto before = norm_importance(d, 2);
    const auto before1 = norm_importance(d, 1);
    const int low = before.ordering.back();
    auto scaled = d;
    const float s = -8.0f;
    for (auto& f : scaled.features) {
        for (auto& v : f.channel(static_cast<std::size_t>(low))) {
            v *= s;
        }
    }
    const auto after = norm_importance(scaled, 2);
    const auto after1 = norm_importance(scaled, 1);
    EXPECT_NEAR(after.score_of(low), 8.0 * before.score_of(low), 1e-12 * after.score_of(low));
    EXPECT_NEAR(after1.score_of(low), 8.0 * before1.score_of(low), 1e-12 * after1.score_of(low));
    EXPECT_EQ(after.ordering.front(), low); // last becomes first
}

TEST(GMImportance, CollinearRepresentatives) {
    const std::vector<double> reps{0.0, 1.0, 2.0};
    const auto t = gm_importance_from_representatives({0, 1, 2}, reps, 1);
    EXPECT_NEAR(t.scores[0], 1.0, 1e-12);
    EXPECT_NEAR(t.scores[1], 0.0, 1e-12);
    EXPECT_NEAR(t.scores[2], 1.0, 1e-12);
    EXPECT_EQ(t.ordering, (std::vector<int>{0, 2, 1}));
    const auto gm = geometric_median(reps, 1);
    EXPECT_NEAR(gm.median[0], 1.0, 1e-12);
}

TEST(GMImportance, IdenticalRepresentativesScoreZero) {
    const std::vector<double> reps{1.5, -2, 1.5, -2, 1.5, -2, 1.5, -2};
    const auto t = gm_importance_from_representatives({3, 1, 2, 0}, reps, 2);
    for (double s : t.scores) {
        EXPECT_NEAR(s, 0.0, 1e-12);
    }
    EXPECT_EQ(t.ordering, (std::vector<int>{0, 1, 2, 3}));
}

TEST(GMImportance, WeiszfeldMatchesBruteForceInTwoD) {
    Rng r(12);
    std::vector<double> pts(2 * 9);
    for (auto& v : pts) {
        v = r.uniform(-3, 3);
    }
    const auto gm = geometric_median(pts, 2);
    auto cost = [&](double x, double y) {
        double s = 0;
        for (std::size_t i = 0; i < 9; ++i) {
            s += std::hypot(pts[2 * i] - x, pts[2 * i + 1] - y);
        }
        return s;
    };
    const double c = cost(gm.median[0], gm.median[1]);
    for (double dx = -1e-3; dx <= 1e-3; dx += 5e-4) {
        for (double dy = -1e-3; dy <= 1e-3; dy += 5e-4) {
            EXPECT_LE(c, cost(gm.median[0] + dx, gm.median[1] + dy) + 1e-9);
        }
    }
}

TEST(GMImportance, TranslationAndRotationInvariant) {
    Rng r(13);
    const std::size_t n = 7, dim = 3;
    std::vector<double> reps(n * dim);
    for (auto& v : reps) {
        v = r.uniform(-2, 2);
    }
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    const auto base = gm_importance_from_representatives(ids, reps, dim);
    auto shifted = reps;
    for (std::size_t i = 0; i < n; ++i) {
        shifted[i * dim] += 5.0;
        shifted[i * dim + 2] -= 1.25;
    }
    const auto moved = gm_importance_from_representatives(ids, shifted, dim);
    // rotation about the z axis
    const double a = 0.7;
    auto rotated = reps;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = reps[i * dim], y = reps[i * dim + 1];
        rotated[i * dim] = std::cos(a) * x - std::sin(a) * y;
        rotated[i * dim + 1] = std::sin(a) * x + std::cos(a) * y;
    }
    const auto turned = gm_importance_from_representatives(ids, rotated, dim);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(moved.scores[i], base.scores[i], 1e-6);
        EXPECT_NEAR(turned.scores[i], base.scores[i], 1e-6);
    }
    EXPECT_EQ(moved.ordering, base.ordering);
}

TEST(GMImportance, DatasetUsesMeanMaps) {
    Dataset d;
    d.patch = {1, 1};
    for (int s = 0; s < 2; ++s) {
        Tensor f(3, 1, 1);
        f.values = {0.0f + s, 1.0f + s, 2.0f + s};
        d.features.push_back(f);
    }
    const auto t = gm_importance(d);
    EXPECT_NEAR(t.score_of(1), 0.0, 1e-12);
    EXPECT_NEAR(t.score_of(2), 1.0, 1e-12);
}

TEST(ImportanceTable, JsonRoundtripAndValidation) {
    const auto t = make_table(Criterion::mi, 2, {5, 3, 9}, {0.25, 0.5, 0.25});
    EXPECT_EQ(t.ordering, (std::vector<int>{3, 5, 9}));
    EXPECT_EQ(t.rank_of(9), 2u);
    EXPECT_EQ(importance_from_json(nlohmann::json::parse(to_json(t).dump())), t);
    const auto n = make_table(Criterion::l2, std::nullopt, {0, 1}, {1.0, 2.0});
    EXPECT_EQ(importance_from_json(to_json(n)), n);
    auto j = to_json(t);
    j["ordering"] = {3, 5, 5};
    EXPECT_THROW(importance_from_json(j), domain_error);
    j = to_json(t);
    j["criterion"] = "l7";
    EXPECT_THROW(importance_from_json(j), domain_error);
    EXPECT_EQ(importance_csv(t), "rank,channel_id,score\n1,3,0.5\n2,5,0.25\n3,9,0.25\n");
}

TEST(ImportanceTable, RandomTablesArePermutations) {
    Rng r(14);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + r.index(40);
        std::vector<int> ids(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            ids[i] = static_cast<int>(i * 3 + 1);
            scores[i] = static_cast<double>(r.index(5)); // many ties
        }
        const auto t = make_table(Criterion::l1, std::nullopt, ids, scores);
        auto sorted = t.ordering;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(sorted, ids);
        for (std::size_t i = 1; i < n; ++i) {
            const double a = t.score_of(t.ordering[i - 1]), b = t.score_of(t.ordering[i]);
            EXPECT_TRUE(a > b || (a == b && t.ordering[i - 1] < t.ordering[i]));
        }
        EXPECT_EQ(importance_from_json(to_json(t)), t);
    }
}

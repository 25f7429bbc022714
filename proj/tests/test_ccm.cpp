#include <gtest/gtest.h>

#include "ccmnet/ccm.hpp"
#include "ccmnet/synthgen.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace ccmnet;

namespace {

std::vector<double> v(std::initializer_list<double> x) { return x; }

std::vector<Neighbor> at_distances(std::initializer_list<double> d) {
    std::vector<Neighbor> out;
    std::size_t i = 0;
    for (double x : d) out.push_back({i, i, x}), ++i;
    return out;
}

}  // namespace

TEST(Embed, DirectConstruction) {
    const auto m = delay_embed(v({1, 2, 3, 4, 5}), {2, 1, 0});
    ASSERT_EQ(m.size(), 4u);
    for (std::size_t p = 0; p < 4; ++p) {
        EXPECT_EQ(m.point(p)[0], static_cast<double>(p + 2));
        EXPECT_EQ(m.point(p)[1], static_cast<double>(p + 1));
        EXPECT_EQ(m.time(p), p + 1);
    }
}

TEST(Embed, SizeAndConstant) {
    std::vector<double> ten(10);
    std::iota(ten.begin(), ten.end(), 0.0);
    const auto m = delay_embed(ten, {3, 2, 0});
    EXPECT_EQ(m.size(), 6u);
    EXPECT_EQ(m.point(0)[0], 4.0);
    EXPECT_EQ(m.point(0)[2], 0.0);
    const auto c = delay_embed(std::vector<double>(8, 3.0), {3, 1, 0});
    for (std::size_t p = 1; p < c.size(); ++p) EXPECT_EQ(c.squared_distance(0, p), 0.0);
}

TEST(Embed, Validation) {
    EXPECT_THROW((void)delay_embed(v({1, 2, 3}), {3, 1, 0}), ValidationError);
    EXPECT_THROW((void)delay_embed(v({1, 2, 3, 4}), {1, 1, 0}), ValidationError);
    EXPECT_THROW((void)delay_embed(v({1, 2, 3, 4}), {2, 0, 0}), ValidationError);
}

TEST(Knn, OneDimensionalExample) {
    // Points with first coordinate 0, 1, 2, 10 (E = 2 embedding of a ramp).
    const auto m = delay_embed(v({0, 0, 1, 2, 10}), {2, 1, 0});
    const auto nb = knn(m, 0, 2);
    ASSERT_EQ(nb.size(), 2u);
    EXPECT_EQ(nb[0].time, 2u);
    EXPECT_EQ(nb[1].time, 3u);
}

TEST(Knn, TiesGoToEarlierTime) {
    const auto m = delay_embed(v({5, 4, 5, 6, 5, 4, 5, 6}), {2, 1, 0});
    const auto nb = knn(m, 2, 3);
    for (std::size_t i = 1; i < nb.size(); ++i) {
        EXPECT_TRUE(nb[i - 1].distance < nb[i].distance ||
                    (nb[i - 1].distance == nb[i].distance && nb[i - 1].time < nb[i].time));
    }
    const auto eq = delay_embed(v({0, 1, 0, 1, 0, 1, 0}), {2, 1, 0});
    const auto same = knn(eq, 0, 2);
    EXPECT_EQ(same[0].time, 3u);
    EXPECT_EQ(same[1].time, 5u);
}

TEST(Knn, MatchesBruteForceSort) {
    SplitMix64 rng(21);
    for (int c = 0; c < 60; ++c) {
        const std::size_t e = 2 + rng.below(4), theiler = rng.below(3);
        const auto x = gen::normals(rng, 30 + rng.below(40));
        const auto m = delay_embed(x, {e, 1 + rng.below(2), theiler});
        std::vector<std::vector<double>> pts;
        std::vector<std::size_t> times;
        for (std::size_t p = 0; p < m.size(); ++p) {
            pts.emplace_back(m.point(p).begin(), m.point(p).end());
            times.push_back(m.time(p));
        }
        const std::size_t q = rng.below(m.size());
        const auto got = knn(m, q, e + 1);
        const auto expected = oracle::knn_times(pts, times, q, e + 1, theiler);
        for (std::size_t i = 0; i <= e; ++i) EXPECT_EQ(got[i].time, expected[i]) << "case " << c;
    }
}

TEST(Knn, MonotoneSeriesGivesTemporalNeighbors) {
    std::vector<double> ramp(20);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = std::pow(1.1, static_cast<double>(t));
    const auto m = delay_embed(ramp, {2, 1, 0});
    const auto nb = knn(m, 10, 2);
    std::vector<std::size_t> times{nb[0].time, nb[1].time};
    std::sort(times.begin(), times.end());
    EXPECT_EQ(times, (std::vector<std::size_t>{m.time(10) - 1, m.time(10) + 1}));
}

TEST(Knn, NotEnoughNeighbors) {
    const auto m = delay_embed(v({1, 2, 3, 4}), {2, 1, 1});
    EXPECT_THROW((void)knn(m, 1, 2), ValidationError);
}

TEST(Weights, EquidistantAveragesValues) {
    const auto w = cross_map_weights(at_distances({2, 2, 2}));
    for (double x : w) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(Weights, ExactMatchRule) {
    const auto w = cross_map_weights(at_distances({0.5, 0, 3}));
    EXPECT_EQ(w, std::vector<double>({0, 1, 0}));
    const auto two = cross_map_weights(at_distances({0, 0, 3}));
    EXPECT_EQ(two, std::vector<double>({0.5, 0.5, 0}));
}

TEST(Weights, HandExample) {
    const auto w = cross_map_weights(at_distances({1, 2}));
    const double est = 10 * w[0] + 20 * w[1];
    const double expected = (10 * std::exp(-1.0) + 20 * std::exp(-2.0)) / (std::exp(-1.0) + std::exp(-2.0));
    EXPECT_NEAR(est, expected, 1e-12);
    EXPECT_NEAR(est, 12.689, 5e-4);
}

TEST(Weights, NonNegativeAndNormalized) {
    SplitMix64 rng(31);
    for (int c = 0; c < 200; ++c) {
        std::vector<Neighbor> nb;
        for (std::size_t i = 0; i < 2 + rng.below(8); ++i) nb.push_back({i, i, rng.below(4) == 0 ? 0.0 : rng.uniform()});
        const auto w = cross_map_weights(nb);
        double s = 0;
        for (double x : w) {
            EXPECT_GE(x, 0.0);
            s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Estimate, ExactMatchReturnsNeighborValue) {
    // Period-3 series: every point has an identical twin elsewhere.
    const auto x = v({1, 5, 2, 1, 5, 2, 1, 5, 2});
    const auto m = delay_embed(x, {2, 1, 0});
    std::vector<double> aligned(m.size());
    for (std::size_t p = 0; p < m.size(); ++p) aligned[p] = 100.0 + static_cast<double>(p % 3);
    EXPECT_EQ(cross_map_estimate(m, aligned, 0), 100.0);
    EXPECT_EQ(cross_map_estimate(m, aligned, 4), 101.0);
}

TEST(Skill, Examples) {
    const auto a = v({0.3, -1.2, 2.5, 0.7, 1.1});
    std::vector<double> neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    EXPECT_EQ(skill(a, a).value, 1.0);
    EXPECT_EQ(skill(a, neg).value, -1.0);
    const auto b = v({1.0, 0.2, 1.9, -0.4, 0.8});
    EXPECT_EQ(skill(a, b).value, pearson(a, b).value);
    EXPECT_EQ(skill(a, b).value, skill(b, a).value);
    std::vector<double> scaled(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) scaled[i] = 3 * b[i] + 7;
    EXPECT_NEAR(skill(a, scaled).value, skill(a, b).value, 1e-12);
    EXPECT_THROW((void)skill(a, v({1, 2})), ValidationError);
    EXPECT_TRUE(skill(a, v({1, 1, 1, 1, 1})).degenerate);
}

TEST(LibraryGrid, Defaults) {
    const auto s = default_library_sizes(3, 498);
    EXPECT_EQ(s.front(), 5u);
    EXPECT_EQ(s.back(), 498u);
    EXPECT_EQ(s.size(), 10u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
    const auto tight = default_library_sizes(2, 8);
    EXPECT_EQ(tight, (std::vector<std::size_t>{4, 5, 6, 7, 8}));
    EXPECT_THROW((void)default_library_sizes(4, 5), ValidationError);
}

TEST(SkillCurve, RejectsOversizedLibraries) {
    SplitMix64 rng(1);
    const auto x = gen::normals(rng, 50);
    EXPECT_THROW((void)ccm_skill_curve(x, x, {2, 1, 0}, {10, 50}), ValidationError);
    EXPECT_THROW((void)ccm_skill_curve(x, x, {2, 1, 0}, {10, 10}), ValidationError);
    EXPECT_THROW((void)ccm_skill_curve(x, gen::normals(rng, 40), {2, 1, 0}, {10}), ValidationError);
}

TEST(SkillCurve, SelfMapOfRepeatingStatesIsExact) {
    // With a periodic series every state recurs, so the exact-match rule
    // reproduces the series itself.
    std::vector<double> x;
    for (int t = 0; t < 60; ++t) x.push_back(std::sin(2 * M_PI * (t % 7) / 7.0) + 0.1 * (t % 7));
    const auto c = ccm_skill_curve(x, x, {3, 1, 0}, {20, 40, 58});
    for (double s : c.skills) EXPECT_EQ(s, 1.0);
}

TEST(SkillCurve, SelfMapOfChaoticSeriesIsNearOne) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.0, 500, 1);
    const auto c = ccm_skill_curve(p.x, p.x, {2, 1, 0}, default_library_sizes(2, 499));
    EXPECT_GT(c.skills.back(), 0.99);
}

TEST(SkillCurve, IndependentNoiseNearZero) {
    SplitMix64 rng(77);
    const auto x = gen::normals(rng, 500), y = gen::normals(rng, 500);
    const auto c = ccm_skill_curve(x, y, {2, 1, 0}, default_library_sizes(2, 499));
    EXPECT_LT(std::abs(c.skills.back()), 0.15);
    EXPECT_FALSE(make_result(c, 0, {0.5, 0.1}).converged);
}

TEST(SkillCurve, CoupledLogisticAsymmetry) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 500, 42);
    const EmbeddingParams e{2, 1, 0};
    const auto forward = ccm_skill_curve(p.x, p.y, e, {10, 100, 400});
    const auto reverse = ccm_skill_curve(p.y, p.x, e, {10, 100, 400});
    EXPECT_GE(forward.skills.back() - reverse.skills.back(), 0.3);
}

TEST(SkillCurve, Deterministic) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 300, 5);
    const auto a = ccm_skill_curve(p.x, p.y, {3, 1, 1}, default_library_sizes(3, 298));
    const auto b = ccm_skill_curve(p.x, p.y, {3, 1, 1}, default_library_sizes(3, 298));
    EXPECT_EQ(a.skills, b.skills);
    EXPECT_EQ(a.estimates, b.estimates);
}

TEST(SkillCurve, RandomSamplingIsSeeded) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 300, 5);
    const auto sizes = default_library_sizes(2, 299);
    const CrossMapper a(p.y, {2, 1, 0}, sizes, LibrarySampling::random, 9);
    const CrossMapper b(p.y, {2, 1, 0}, sizes, LibrarySampling::random, 9);
    const CrossMapper c(p.y, {2, 1, 0}, sizes, LibrarySampling::prefix);
    EXPECT_EQ(a.skill_curve(p.x).skills, b.skill_curve(p.x).skills);
    EXPECT_NE(a.skill_curve(p.x).skills, c.skill_curve(p.x).skills);
    EXPECT_EQ(a.skill_curve(p.x).skills.back(), c.skill_curve(p.x).skills.back());
}

TEST(SkillCurve, PermutedTargetDestroysConvergence) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 500, 42);
    std::vector<double> y = p.y;
    SplitMix64 rng(3);
    for (std::size_t i = y.size(); i > 1; --i) std::swap(y[i - 1], y[rng.below(i)]);
    const auto c = ccm_skill_curve(p.x, y, {2, 1, 0}, default_library_sizes(2, 499));
    EXPECT_LT(c.skills.back(), 0.3);
}

TEST(CcmTest, CoupledAndIndependent) {
    const ConvergenceRule rule{0.5, kDefaultMinImprovement};
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 500, 42);
    const auto sizes = default_library_sizes(2, 499);
    EXPECT_TRUE(ccm_test(p.x, p.y, {2, 1, 0}, sizes, rule).converged);
    EXPECT_FALSE(ccm_test(p.y, p.x, {2, 1, 0}, sizes, rule).converged);

    const auto q = synth::coupled_logistic(3.8, 3.5, 0.0, 0.0, 500, 42);
    EXPECT_FALSE(ccm_test(q.x, q.y, {2, 1, 0}, sizes, rule).converged);
    EXPECT_FALSE(ccm_test(q.y, q.x, {2, 1, 0}, sizes, rule).converged);
}

TEST(CcmTest, ResultMatchesCurve) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 200, 8);
    const auto r = ccm_test(p.x, p.y, {2, 1, 0}, default_library_sizes(2, 199), {0.5, 0.1});
    EXPECT_EQ(r.skill, r.curve.skills.back());
    EXPECT_EQ(r.converged, r.curve.skills.back() - r.curve.skills.front() >= 0.1 && r.skill >= 0.5);
}

TEST(EmbeddingDimension, Selection) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.0, 400, 2);
    const std::size_t e = select_embedding_dimension(p.x);
    EXPECT_GE(e, 2u);
    EXPECT_LE(e, 8u);
    EXPECT_EQ(e, select_embedding_dimension(p.x));
    // A constant series predicts nothing; every E ties and the smallest wins.
    EXPECT_EQ(select_embedding_dimension(std::vector<double>(50, 1.0)), 2u);
    EXPECT_THROW((void)select_embedding_dimension(std::vector<double>(10, 1.0)), ValidationError);
}

TEST(LagScan, ShiftedCopyPeaksOnDelayCoordinates) {
    // y(t) = x(t - 3): lags 1..3 place the source value on a coordinate of the
    // target delay vector (E = 3), so they cross-map almost perfectly.
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.0, 500, 4);
    const auto y = synth::shifted_copy(p.x, 3, 0.01, 5);
    CcmSettings s;
    s.dimension = 3;
    const auto scan = lag_scan(p.x, y, s);
    ASSERT_EQ(scan.per_lag.size(), 8u);
    EXPECT_EQ(kDefaultMaxLag, 7u);
    for (std::size_t k = 1; k <= 3; ++k) EXPECT_GT(scan.per_lag[k].skill, 0.99) << "lag " << k;
    for (std::size_t k = 5; k <= 7; ++k) EXPECT_LT(scan.per_lag[k].skill, 0.9) << "lag " << k;
}

TEST(LagScan, LagPairsShiftedSourceWithTarget) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 300, 9);
    CcmSettings s;
    s.dimension = 2;
    s.max_lag = 3;
    const auto scan = lag_scan(p.x, p.y, s);
    const std::span<const double> x(p.x), y(p.y);
    const auto sizes = default_library_sizes(2, 296);
    for (std::size_t k = 0; k <= 3; ++k) {
        const auto direct = ccm_test(x.subspan(3 - k, 297), y.subspan(3), {2, 1, 0}, sizes, s.rule);
        EXPECT_EQ(scan.per_lag[k].curve.skills, direct.curve.skills) << "lag " << k;
    }
}

TEST(LagScan, ZeroMaxLagIsSingleTest) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.32, 300, 6);
    CcmSettings s;
    s.dimension = 3;
    s.max_lag = 0;
    const auto scan = lag_scan(p.x, p.y, s);
    ASSERT_EQ(scan.per_lag.size(), 1u);
    const auto direct = ccm_test(p.x, p.y, {3, 1, 0}, default_library_sizes(3, 298), s.rule);
    EXPECT_EQ(scan.per_lag[0].curve.skills, direct.curve.skills);
    EXPECT_EQ(scan.per_lag[0].converged, direct.converged);
}

TEST(LagScan, PicksStrongestConvergedLagWithTiesToSmaller) {
    std::vector<CausalResult> r(4);
    r[0] = {0, 0.9, false, {}};
    r[1] = {1, 0.6, true, {}};
    r[2] = {2, 0.7, true, {}};
    r[3] = {3, 0.7, true, {}};
    EXPECT_EQ(pick_best_lag(r), std::optional<std::size_t>(2));
    for (auto& x : r) x.converged = false;
    EXPECT_FALSE(pick_best_lag(r).has_value());
}

TEST(LagScan, NoiseOnlyDoesNotConverge) {
    const auto p = synth::coupled_logistic(3.8, 3.5, 0.0, 0.0, 400, 12);
    const auto y = synth::shifted_copy(p.x, 2, 50.0, 13);
    const auto scan = lag_scan(p.x, y, CcmSettings{});
    EXPECT_FALSE(scan.best_lag.has_value());
}

TEST(LagScan, TooShort) {
    EXPECT_THROW((void)lag_scan(v({1, 2, 3, 4, 5}), v({1, 2, 3, 4, 5}), CcmSettings{}), ValidationError);
    EXPECT_THROW((void)lag_scan(v({1, 2, 3}), v({1, 2}), CcmSettings{}), ValidationError);
}

#include <gtest/gtest.h>

#include <cmath>

#include "scaleclock/conditioning.hpp"

using namespace scaleclock;

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// P[R_s ≤ r] for a three-dimensional Bessel process started at x
double bes3_cdf(double x, double s, double r) {
    const double sd = std::sqrt(s);
    auto pdf = [&](double u) { return std::exp(-u * u / (2 * s)) / std::sqrt(2 * M_PI * s); };
    return norm_cdf((r - x) / sd) + norm_cdf((r + x) / sd) - 1 + (s / x) * (pdf(r + x) - pdf(r - x));
}

}  // namespace

TEST(Conditioned, AcceptanceIsExitProbability) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    const ConcaveFn rho = from_eigen(bm, 0.25);
    const double x = 1.0, r = 10 * rho.rho(x);
    ConditionOptions opt;
    opt.seed = 4;
    const ConditionedSample cs = sample_conditioned(bm, rho, x, r, 0.5, 300, opt);
    EXPECT_GE(cs.accepted, 300u);
    EXPECT_EQ(cs.values.size(), cs.accepted);
    EXPECT_LE(cs.accepted, cs.proposed);
    EXPECT_EQ(cs.censored, 0u);
    EXPECT_TRUE(cs.exit_rate().within(0.1, 4)) << cs.exit_rate().value << " +- " << cs.exit_rate().se();
}

TEST(Conditioned, BudgetExhaustionIsReported) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    const ConcaveFn rho = from_eigen(bm, 0.5);
    ConditionOptions opt;
    opt.max_proposals = 20;
    try {
        sample_conditioned(bm, rho, 0.5, 1e8, 0.5, 10, opt);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::budget);
    }
    EXPECT_THROW(sample_conditioned(bm, rho, 1.0, 0.5 * rho.rho(1.0), 0.5, 10, opt), Error);
}

TEST(HMarginal, BesselThreeForMinimalEigenfunction) {
    // the ψ_{−c²/2} transform of BM with drift −c is BES(3)
    const DiffusionSpec bm = make_bm_drift(1.0);
    const HTransformed h = h_transform(bm, from_eigen(bm, 0.5));
    const double x = 0.5, s = 1.0;
    McOptions opt;
    opt.seed = 6;
    const auto xs = sample_htransformed_marginal(h, x, s, 3000, opt);
    for (double v : xs) EXPECT_GT(v, 0.0);
    const OneSampleKs ks = ks_against(xs, [&](double r) { return bes3_cdf(x, s, r); });
    EXPECT_TRUE(ks.pass) << ks.ks << " vs " << ks.critical;
}

TEST(HMarginal, ConditionedLawApproachesHTransform) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    const ConcaveFn rho = from_eigen(bm, 0.25);
    const double x = 1.5, s = 1.0;
    ConditionOptions opt;
    opt.seed = 8;
    const ConditionedSample cs = sample_conditioned(bm, rho, x, 400, s, 600, opt);
    McOptions hopt;
    hopt.seed = 9;
    const auto hs = sample_htransformed_marginal(h_transform(bm, rho), x, s, 3000, hopt);
    const LawComparison cmp = compare_laws(cs.values, hs);
    EXPECT_TRUE(cmp.pass) << cmp.ks << " vs " << cmp.critical;
    EXPECT_LT(quantile_cell_gap(cs.values, hs), 0.08);
    EXPECT_EQ(quantile_cell_gap(hs, hs), 0.0);
}

TEST(Conditioned, ClassOneVariantExcludesEarlyClocks) {
    const DiffusionSpec ou = make_ou(1.0);
    const ConcaveFn rho = build_from_phi(ou, [](double y) { return 1.0 + y; });
    ASSERT_EQ(default_variant(rho), ConditionVariant::exit_after_s);
    ConditionOptions opt;
    opt.seed = 10;
    opt.variant = ConditionVariant::exit_after_s;
    const double x = 1.0, r = 5 * rho.rho(x);
    const ConditionedSample cs = sample_conditioned(ou, rho, x, r, 0.3, 200, opt);
    EXPECT_EQ(cs.accepted, cs.exits - cs.clock_before_s);
    EXPECT_TRUE(cs.exit_rate().within(0.2, 4)) << cs.exit_rate().value;
}

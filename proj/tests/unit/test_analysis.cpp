#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scaleclock/analysis.hpp"

using namespace scaleclock;

TEST(TailTriviality, BrownianViaProposition) {
    for (double c : {1.0, 2.0}) {
        const DiffusionSpec bm = make_bm_drift(c);
        for (double lambda : {0.2 * c * c, 0.5 * c * c}) {
            const TailTriviality t = tail_triviality(bm, from_eigen(bm, lambda));
            EXPECT_TRUE(t.trivial) << t.evidence;
            EXPECT_EQ(t.via, TailVia::prop43) << t.evidence;
            EXPECT_NEAR(t.prop43_ratios.back().second, 1 / (2 * c * c), 1e-3);
        }
    }
}

TEST(TailTriviality, OrnsteinUhlenbeckCases) {
    const DiffusionSpec ou = make_ou(1.0);
    for (double lambda : {0.25, 0.5, 0.75}) {
        const TailTriviality t = tail_triviality(ou, from_eigen(ou, lambda));
        EXPECT_FALSE(t.trivial) << t.evidence;
        EXPECT_EQ(t.via, TailVia::case_ii) << t.evidence;
    }
    const TailTriviality t = tail_triviality(ou, from_eigen(ou, 1.0));
    EXPECT_TRUE(t.trivial);
    EXPECT_EQ(t.via, TailVia::case_i);
}

TEST(TailTriviality, RoutesAgreeForBrownian) {
    // the direct integral also diverges where the ratio criterion applies
    const DiffusionSpec bm = make_bm_drift(1.0);
    EXPECT_TRUE(eq23_integral(bm, from_eigen(bm, 0.3)).divergent());
    EXPECT_TRUE(eq23_integral(bm, from_eigen(bm, 0.5)).divergent());
}

TEST(GammaPower, IsADistributionWithUnitMean) {
    const double c = 1.0;
    for (auto [lambda, mu] : {std::pair{0.25, 0.5}, std::pair{0.5, 0.25}, std::pair{0.2, 0.8}}) {
        double prev = 0;
        for (double w = 1e-3; w < 1e3; w *= 1.3) {
            const double f = gamma_power_cdf(c, lambda, mu, w);
            EXPECT_GE(f, prev - 1e-15);
            prev = f;
        }
        EXPECT_LT(gamma_power_cdf(c, lambda, mu, 1e-12), 1e-3);
        EXPECT_GT(gamma_power_cdf(c, lambda, mu, 1e12), 1 - 1e-3);
        // E Z = ∫₀^∞ (1 − F), in log w
        auto tail = [&](double lw) {
            const double w = std::exp(lw);
            return (1 - gamma_power_cdf(c, lambda, mu, w)) * w;
        };
        const double mean = integrate(tail, -40.0, 0.0, 1e-10).value + integrate(tail, 0.0, 60.0, 1e-10).value;
        EXPECT_NEAR(mean, 1.0, 2e-3) << lambda << " " << mu;
    }
    EXPECT_THROW(gamma_power_cdf(1.0, 0.5, 0.5, 1.0), Error);
    EXPECT_THROW(gamma_power_cdf(1.0, 1.5, 0.5, 1.0), Error);
}

TEST(GammaPower, MatchesDirectDraws) {
    const double c = 1.0, lambda = 0.25, mu = 0.5;
    const double a = (c - lambda) / (2 * c), p = (mu - lambda) / (2 * c);
    const double k = std::tgamma(a) / std::tgamma((c - mu) / (2 * c));
    std::mt19937_64 eng(123);
    std::gamma_distribution<double> gam(a, 1.0);
    std::vector<double> z(200000);
    for (double& v : z) v = k * std::pow(gam(eng), -p);
    const OneSampleKs ks = ks_against(z, [&](double w) { return gamma_power_cdf(c, lambda, mu, w); });
    EXPECT_TRUE(ks.pass) << ks.ks;
    EXPECT_NEAR(gamma_power_cdf(c, lambda, mu, median(z)), 0.5, 0.005);
}

TEST(OuHittingLimit, MatchesDirectDraws) {
    const double c = 2.0, lambda = 0.5;
    std::mt19937_64 eng(5);
    std::gamma_distribution<double> gam((c - lambda) / (2 * c), 1.0);
    std::vector<double> v(100000);
    for (double& x : v) x = -std::log(gam(eng) / c) / (2 * c);
    EXPECT_TRUE(ks_against(v, [&](double t) { return ou_hitting_limit_cdf(c, lambda, t); }).pass);
}

TEST(Karamata, ThreeShapes) {
    const double lambda = 0.5;
    std::vector<double> t, pure, slow, osc;
    for (int k = 0; k <= 1000; ++k) {
        const double s = 0.1 * k;
        t.push_back(s);
        pure.push_back(std::exp(-lambda * s));
        slow.push_back(std::exp(-lambda * s) * (1 + 1 / (1 + s)));
        osc.push_back(std::exp(-lambda * s) * std::pow(std::sin(s), 2) + 1e-300);
    }
    const KaramataResult a = karamata_check(t, pure, lambda);
    EXPECT_TRUE(a.i_holds && a.ii_holds && !a.inconclusive);
    EXPECT_LT(a.i_deviation, 1e-12);
    const KaramataResult b = karamata_check(t, slow, lambda);
    EXPECT_TRUE(b.i_holds && b.ii_holds) << b.i_deviation << " " << b.ii_value;
    EXPECT_FALSE(karamata_check(t, osc, lambda).i_holds);
}

TEST(RatioMartingale, BrownianMedianFalls) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    McOptions opt;
    opt.seed = 77;
    const RatioLimit r = ratio_martingale_limit(bm, 0.3, 0.5, 0.0, {2.0, 4.0, 8.0}, 400, opt);
    EXPECT_GT(r.medians[0], r.medians[1]);
    EXPECT_GT(r.medians[1], r.medians[2]);
    for (double f : r.censored_fraction) EXPECT_EQ(f, 0.0);
    const RatioLimit same = ratio_martingale_limit(bm, 0.3, 0.3, 0.0, {2.0}, 20, opt);
    for (double w : same.W[0]) EXPECT_NEAR(w, 1.0, 1e-12);
}

TEST(RatioMartingale, OuGammaPowerLaw) {
    const DiffusionSpec ou = make_ou(1.0);
    McOptions opt;
    opt.seed = 78;
    const RatioLimit r = ratio_martingale_limit(ou, 0.25, 0.5, 0.0, {6.0}, 2000, opt);
    const OneSampleKs ks = ks_against(r.W[0], [](double w) { return gamma_power_cdf(1.0, 0.25, 0.5, w); });
    EXPECT_TRUE(ks.pass) << ks.ks << " vs " << ks.critical;
}

TEST(Attraction, QsdIsAFixedPoint) {
    const DiffusionSpec ou = make_ou(1.0);
    const double lambda = 0.5;
    const EigenFn psi = psi_for(ou, -lambda);
    McOptions opt;
    opt.seed = 90;
    const AttractionResult a = attraction_ratio(
        ou, [&](double x) { return std::log(lambda) + psi.log_value(x); }, lambda, [](double) { return 1.0; },
        {0.0, 1.0, 2.0}, 3000, opt, false);
    EXPECT_NEAR(a.target, 1.0, 1e-6);
    EXPECT_NEAR(a.ratio[0].value, 1.0, 1e-12);
    for (const McEstimate& e : a.ratio) EXPECT_TRUE(e.within(1.0, 3)) << e.value << " +- " << e.se();
}

TEST(Attraction, SamplerReproducesSurvival) {
    // exponential law: μ(x,∞) = e^{−x}
    const SurvivalSampler s([](double x) { return -x; }, 60.0);
    std::vector<double> v;
    for (int i = 1; i < 20000; ++i) v.push_back(s.draw(i / 20000.0));
    EXPECT_LT(ks_against(v, [](double x) { return -std::expm1(-x); }).ks, 1e-3);
}

TEST(Attraction, SamplerExtendsPowerTail) {
    // Pareto law μ(x,∞) = min(1, x^{-1/2}), tabulated only up to 10
    const SurvivalSampler s([](double x) { return std::min(0.0, -0.5 * std::log(x)); }, 10.0);
    for (double u : {0.2, 0.01, 1e-4, 1e-8}) EXPECT_NEAR(s.draw(u), 1.0 / (u * u), 1e-6 / (u * u)) << u;
}

TEST(Attraction, SamplerExtentCoversOuQsdTail) {
    const DiffusionSpec ou = make_ou(1.0);
    const EigenFn psi = psi_for(ou, -0.5);
    auto g = [&](double y) { return std::log(0.5) + psi.log_value(y) + ou.speed.log_density(y); };
    const RealFn ls = [&](double x) { return improper_log_integral(g, x).log_value; };
    const double hi = sampler_extent(ou, ls, ou.extent);
    EXPECT_GE(hi, 1e3 * ou.extent);
    // the tail of λψ dm decays like x^{-1/2}
    EXPECT_NEAR((ls(hi) - ls(hi / 10)) / std::log(10.0), -0.5, 1e-3);
}

TEST(AbsContinuity, IdentityWithEqualPair) {
    const DiffusionSpec ou = make_ou(1.0);
    const ConcaveFn a = from_eigen(ou, 0.5);
    McOptions opt;
    opt.seed = 3;
    const AbsContinuityMc r = mutual_abs_continuity_mc(ou, a, a, 1.0, 200, 8.0, opt);
    EXPECT_NEAR(r.omega.value, 1.0, 1e-12);
    EXPECT_EQ(r.omega.se(), 0.0);
}

TEST(AbsContinuity, TailPerturbedPairHasUnitMass) {
    const DiffusionSpec ou = make_ou(1.0);
    const TailPerturbation tp = tail_perturbation(ou, 0.5, 0.1);
    McOptions opt;
    opt.seed = 4;
    const AbsContinuityMc r = mutual_abs_continuity_mc(ou, tp.alpha, tp.beta, 1.0, 1500, 12.0, opt);
    EXPECT_LT(r.censored, 0.05);
    EXPECT_TRUE(r.omega.within(1.0, 3)) << r.omega.value << " +- " << r.omega.se();
    const McEstimate diff{r.event_rhs.value - r.event_direct.value,
                          std::hypot(r.event_rhs.se(), r.event_direct.se()), 1500};
    EXPECT_TRUE(diff.within(0.0, 3)) << r.event_rhs.value << " vs " << r.event_direct.value;
}

// M_t for ou with ψ_{−λ}, λ < c, has infinite variance once t > log 2 / 2c, so
// the engine is checked on M_t 1{X_t < K} against the killed OU density by images.
TEST(Martingale, TruncatedOuMeanMatchesImages) {
    const DiffusionSpec spec = make_ou(1.0);
    const double lambda = 0.5, x = 1.0, K = 2.0;
    const ConcaveFn rho = from_eigen(spec, lambda);
    const std::vector<double> times{0.5, 2.0};
    Stops st;
    st.observe = times;
    SimScheme sc;
    sc.horizon = times.back();
    const PathEngine eng = base_engine(spec, sc, st, {functional_rate(rho)});
    const std::size_t n = 20000;
    std::vector<std::vector<double>> v(times.size());
    for (std::size_t i = 0; i < n; ++i) {
        const PathResult p = eng.run(x, {31, i});
        for (std::size_t k = 0; k < times.size(); ++k) {
            const Snapshot* s = p.snapshot(times[k]);
            v[k].push_back(s && s->x < K ? martingale_value(p, rho, times[k]) : 0.0);
        }
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k], mu = std::exp(-t) * x, var = (1 - std::exp(-2 * t)) / 2;
        auto g = [&](double y) { return std::exp(-(y - mu) * (y - mu) / (2 * var)) / std::sqrt(2 * M_PI * var); };
        double I = 0;
        const int N = 20000;
        const double h = K / N;
        for (int j = 0; j < N; ++j) {
            const double y = (j + 0.5) * h;
            I += h * rho.rho(y) * (g(y) - g(-y));
        }
        const double exact = std::exp(lambda * t) / rho.rho(x) * I;
        const McEstimate e = mean_estimate(v[k]);
        EXPECT_NEAR(e.value, exact, 3 * e.se()) << "t=" << t;
    }
}

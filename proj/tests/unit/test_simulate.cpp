#include <gtest/gtest.h>

#include <cmath>

#include "scaleclock/simulate.hpp"
#include "scaleclock/stats.hpp"

using namespace scaleclock;

namespace {

// E_x e^{−βT₀} for BM with drift −c: exp(−x(√(c² + 2β) − c))
double bm_laplace(double c, double beta, double x) { return std::exp(-x * (std::sqrt(c * c + 2 * beta) - c)); }

}  // namespace

TEST(Stats, KolmogorovCriticalAndRatio) {
    EXPECT_NEAR(kolmogorov_critical(0.01), 1.6276, 1e-4);
    EXPECT_NEAR(kolmogorov_survival(kolmogorov_critical(0.05)), 0.05, 1e-3);
    const McEstimate r = ratio_estimate({2.0, 0.1, 100}, {4.0, 0.2, 100});
    EXPECT_DOUBLE_EQ(r.value, 0.5);
    EXPECT_NEAR(r.se(), std::sqrt(0.025 * 0.025 + 0.025 * 0.025), 1e-15);
    EXPECT_THROW(ratio_estimate({1.0, 0.1, 10}, {0.1, 0.2, 10}), Error);
    const LawComparison same = compare_laws({1, 2, 3, 4}, {1, 2, 3, 4});
    EXPECT_EQ(same.ks, 0.0);
    EXPECT_EQ(same.wasserstein1, 0.0);
    const LawComparison shifted = compare_laws({0, 1}, {0.5, 1.5});
    EXPECT_DOUBLE_EQ(shifted.wasserstein1, 0.5);
    EXPECT_DOUBLE_EQ(shifted.ks, 0.5);
}

TEST(Rng, ParallelMapIndependentOfThreads) {
    auto f = [](std::size_t i) {
        auto e = RngStream{7, i}.engine();
        return std::uniform_real_distribution<double>()(e);
    };
    const auto a = parallel_map<double>(1001, 1, f), b = parallel_map<double>(1001, 4, f);
    EXPECT_EQ(a, b);
    EXPECT_NE(RngStream({7, 0}).engine()(), RngStream({7, 1}).engine()());
    EXPECT_NE(RngStream({7, 0}).engine(0)(), RngStream({7, 0}).engine(1)());
}

TEST(Simulate, LaplaceOfAbsorptionTime) {
    const double c = 1.0, x0 = 1.0;
    const DiffusionSpec bm = make_bm_drift(c);
    SimScheme scheme;
    scheme.step = 1e-3;
    scheme.horizon = 60;
    const PathEngine eng = base_engine(bm, scheme, {});
    const std::size_t n = 4000;
    for (double beta : {0.5, 2.0}) {
        const auto v = parallel_map<double>(n, 1, [&](std::size_t i) {
            const PathResult p = eng.run(x0, {11, i});
            return p.T0 ? std::exp(-beta * *p.T0) : 0.0;
        });
        const McEstimate e = mean_estimate(v);
        EXPECT_TRUE(e.within(bm_laplace(c, beta, x0), 4)) << beta << " " << e.value << " +- " << e.se();
        EXPECT_NEAR(laplace_T0(bm, beta, x0), bm_laplace(c, beta, x0), 1e-8);
    }
}

TEST(Simulate, BridgeCorrectionRemovesOvershootBias) {
    // with a coarse step the uncorrected scheme misses crossings and inflates T₀
    const DiffusionSpec bm = make_bm_drift(1.0);
    SimScheme coarse;
    coarse.step = 0.05;
    coarse.horizon = 80;
    SimScheme raw = coarse;
    raw.bridge_correction = false;
    const double x0 = 0.5, target = bm_laplace(1.0, 1.0, x0);
    auto mean_for = [&](const SimScheme& s) {
        const PathEngine eng = base_engine(bm, s, {});
        return mean_estimate(parallel_map<double>(4000, 1, [&](std::size_t i) {
            const PathResult p = eng.run(x0, {3, i});
            return std::exp(-*p.T0);
        }));
    };
    const McEstimate with = mean_for(coarse), without = mean_for(raw);
    EXPECT_LT(std::abs(with.value - target), std::abs(without.value - target));
    EXPECT_TRUE(with.within(target, 4)) << with.value << " vs " << target;
}

TEST(Simulate, HitProbabilityIsScaleRatio) {
    const DiffusionSpec ou = make_ou(1.0);
    Stops st;
    st.hit_levels = {2.0};
    st.stop_at_hits = true;
    SimScheme scheme;
    scheme.step = 1e-3;
    const PathEngine eng = base_engine(ou, scheme, st);
    const double x0 = 0.8;
    // independent scale: ∫₀ˣ e^{y²} dy by Simpson
    auto scale = [](double x) {
        const int n = 2000;
        double s = 0;
        for (int i = 0; i <= n; ++i) {
            const double y = x * i / n, w = i == 0 || i == n ? 1 : (i % 2 ? 4 : 2);
            s += w * std::exp(y * y);
        }
        return s * x / (3 * n);
    };
    const auto v = parallel_map<double>(4000, 1, [&](std::size_t i) {
        const PathResult p = eng.run(x0, {5, i});
        return p.hit_time(2.0) ? 1.0 : 0.0;
    });
    const McEstimate e = mean_estimate(v);
    EXPECT_TRUE(e.within(scale(x0) / scale(2.0), 4)) << e.value << " vs " << scale(x0) / scale(2.0);
}

TEST(Simulate, MartingaleHasUnitMean) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    const double lambda = 0.3, x0 = 1.0;
    const ConcaveFn rho = from_eigen(bm, lambda);
    Stops st;
    st.observe = {0.5, 2.0};
    SimScheme scheme;
    scheme.step = 1e-3;
    scheme.horizon = 2.0;
    const PathEngine eng = base_engine(bm, scheme, st, {functional_rate(rho)});
    const auto paths = parallel_map<PathResult>(4000, 1, [&](std::size_t i) { return eng.run(x0, {9, i}); });
    for (double t : st.observe) {
        std::vector<double> m;
        for (const PathResult& p : paths) {
            const double v = martingale_value(p, rho, t);
            // closed form e^{λt} ψ(X_t)/ψ(x₀) on survival
            const Snapshot* s = p.snapshot(t);
            ASSERT_NE(s, nullptr);
            if (s->x > 0) {
                EXPECT_NEAR(v, std::exp(lambda * t) * rho.rho(s->x) / rho.rho(x0), 1e-6 * (1 + v));
            }
            m.push_back(v);
        }
        const McEstimate e = mean_estimate(m);
        EXPECT_TRUE(e.within(1.0, 4)) << t << " " << e.value << " +- " << e.se();
    }
}

TEST(Simulate, ClockExitProbability) {
    // P_x[S_r < T₀] = ρ(x)/r for the continuous martingale ρ(X)/ρ(x) e^{−A}
    const DiffusionSpec bm = make_bm_drift(1.0);
    const ConcaveFn rho = from_eigen(bm, 0.3);
    const double x0 = 1.0, r = 4 * rho.rho(x0);
    Stops st;
    st.clock = ClockStop{0, [rho](double x) { return rho.log_rho(x); }, {r}};
    st.stop_at_clock = true;
    SimScheme scheme;
    scheme.step = 1e-3;
    const PathEngine eng = base_engine(bm, scheme, st, {functional_rate(rho)});
    const auto v = parallel_map<double>(4000, 1, [&](std::size_t i) {
        const PathResult p = eng.run(x0, {13, i});
        EXPECT_NE(p.terminated_by, Termination::horizon);
        return p.clock_time(r) ? 1.0 : 0.0;
    });
    const McEstimate e = mean_estimate(v);
    EXPECT_TRUE(e.within(0.25, 4)) << e.value << " +- " << e.se();
}

TEST(Simulate, ClockBridgeRemovesCoarseStepBias) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    const ConcaveFn rho = from_eigen(bm, 0.25);
    const double x0 = 1.0, r = 10.0;
    Stops st;
    st.clock = ClockStop{0, [rho](double x) { return rho.log_rho(x); }, {r}};
    st.stop_at_clock = true;
    auto estimate = [&](bool bridge) {
        SimScheme scheme;
        scheme.step = 1e-2;
        scheme.bridge_correction = bridge;
        const PathEngine eng = base_engine(bm, scheme, st, {functional_rate(rho)});
        const auto v = parallel_map<double>(20000, 1, [&](std::size_t i) {
            return eng.run(x0, {17, i}).clock_time(r) ? 1.0 : 0.0;
        });
        return mean_estimate(v);
    };
    const double truth = rho.rho(x0) / r;
    const McEstimate on = estimate(true), off = estimate(false);
    EXPECT_TRUE(on.within(truth, 3)) << on.value << " +- " << on.se() << " vs " << truth;
    EXPECT_LT(off.value, truth - 3 * off.se());
}

TEST(Simulate, ExitClockFromTrajectoryMatchesOnline) {
    const DiffusionSpec ou = make_ou(1.0);
    const ConcaveFn rho = from_eigen(ou, 0.5);
    const double r = 3 * rho.rho(1.0);
    Stops st;
    st.clock = ClockStop{0, [rho](double x) { return rho.log_rho(x); }, {r}};
    st.record = true;
    SimScheme scheme;
    scheme.horizon = 20;
    // the online bridge also finds crossings inside a step, which a stored trajectory cannot show
    scheme.bridge_correction = false;
    const PathEngine eng = base_engine(ou, scheme, st, {functional_rate(rho)}, false);
    int crossed = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const PathResult p = eng.run(1.0, {21, i});
        const auto online = p.clock_time(r);
        const auto post = exit_clock(p, rho, r);
        ASSERT_EQ(online.has_value(), post.has_value()) << i;
        if (online) {
            EXPECT_NEAR(*online, *post, 1e-9);
            ++crossed;
        }
    }
    EXPECT_GT(crossed, 0);
}

TEST(Simulate, HDiffusionEntersFromZero) {
    // under P^[ψ_{−λ}], E₀ e^{−βT_y} against the eigenfunction ratio
    const DiffusionSpec bm = make_bm_drift(1.0);
    const double lambda = 0.3, y = 3.0, beta = 0.1;
    const HTransformed h = h_transform(bm, from_eigen(bm, lambda));
    Stops st;
    st.hit_levels = {y};
    st.stop_at_hits = true;
    SimScheme scheme;
    scheme.step = 1e-3;
    const PathEngine eng = h_engine(h, scheme, st);
    const auto v = parallel_map<double>(3000, 1, [&](std::size_t i) {
        const PathResult p = eng.run(0.0, {17, i});
        EXPECT_FALSE(p.T0.has_value());
        return std::exp(-beta * *p.hit_time(y));
    });
    const McEstimate e = mean_estimate(v);
    // ψ_{−λ}(y)/ψ_{−(λ−β)}(y), both eigenfunctions having slope 1 at 0
    const double k1 = std::sqrt(1 - 2 * lambda), k2 = std::sqrt(1 - 2 * (lambda - beta));
    const double exact = (std::sinh(k1 * y) / k1) / (std::sinh(k2 * y) / k2);
    EXPECT_TRUE(e.within(exact, 4)) << e.value << " vs " << exact;
    EXPECT_NEAR(laplace_hit_htransform(bm, lambda, beta, 0.0, y), exact, 1e-8);
}

TEST(Simulate, SameSeedSamePath) {
    const DiffusionSpec ou = make_ou(1.0);
    Stops st;
    st.record = true;
    SimScheme scheme;
    scheme.horizon = 5;
    const PathEngine eng = base_engine(ou, scheme, st);
    const PathResult a = eng.run(1.0, {42, 3}), b = eng.run(1.0, {42, 3}), c = eng.run(1.0, {42, 4});
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.T0, b.T0);
    EXPECT_NE(a.states, c.states);
}

TEST(Simulate, CoarsenedRunTracksFinePath) {
    // a coarsened run reuses the fine Gaussian draws, so paths stay close
    const DiffusionSpec bm = make_bm_drift(1.0);
    Stops st;
    st.observe = {0.5};
    st.absorb_at_0 = false;
    SimScheme fine;
    fine.step = 1e-3;
    fine.horizon = 0.5;
    SimScheme coarse = fine;
    coarse.step = 2e-3;
    coarse.coarsen = 2;
    const PathEngine ef = base_engine(bm, fine, st), ec = base_engine(bm, coarse, st);
    for (std::uint64_t i = 0; i < 20; ++i) {
        const PathResult a = ef.run(5.0, {8, i}), b = ec.run(5.0, {8, i});
        EXPECT_NEAR(a.snapshots.at(0).x, b.snapshots.at(0).x, 1e-9);
    }
}

TEST(Simulate, MissingSdeIsSchemeError) {
    DiffusionSpec bm = make_bm_drift(1.0);
    bm.sde.reset();
    try {
        base_engine(bm, {}, {});
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::scheme);
    }
}

TEST(Chain, NaturalScaleIsSymmetric) {
    // driftless BM: the chain is a simple symmetric walk
    DiffusionSpec bm0;
    ScaleFn::Parts sp;
    sp.slope = [](double) { return 1.0; };
    sp.log_slope = [](double) { return 0.0; };
    sp.dlog_slope = [](double) { return 0.0; };
    sp.value = [](double x) { return x; };
    sp.log_value = [](double x) { return std::log(x); };
    sp.inverse = [](double x) { return x; };
    bm0.scale = ScaleFn(std::move(sp));
    bm0.speed = Measure1D([](double) { return 2.0; }, [](double) { return std::log(2.0); });
    bm0.extent = 5.0;
    const BirthDeathChain ch(bm0, 0.1, 5.0);
    for (std::size_t i = 1; i + 1 < ch.size(); ++i) {
        EXPECT_NEAR(ch.up(i), 0.5, 1e-12);
        EXPECT_NEAR(ch.mean_holding(i), 0.01, 1e-10);  // h²/σ²
    }
    EXPECT_NEAR(ch.hit_probability(1.0, 4.0), 0.25, 1e-10);
}

TEST(Chain, HitProbabilityAndLaplace) {
    const double c = 1.0;
    const DiffusionSpec bm = make_bm_drift(c);
    const BirthDeathChain ch(bm, 0.02, 30.0);
    const auto s = [&](double x) { return std::expm1(2 * c * x) / (2 * c); };
    EXPECT_NEAR(ch.hit_probability(1.0, 3.0), s(1.0) / s(3.0), 1e-9);
    for (double beta : {0.5, 2.0}) {
        const double exact = bm_laplace(c, beta, 1.0);
        EXPECT_NEAR(ch.laplace_T0(beta, 1.0) / exact, 1.0, 0.02) << beta;
    }
    // Monte Carlo over the chain against its own exact Laplace transform
    Stops st;
    const auto v = parallel_map<double>(4000, 1, [&](std::size_t i) {
        const PathResult p = ch.run(1.0, st, 200, {31, i});
        return p.T0 ? std::exp(-*p.T0) : 0.0;
    });
    EXPECT_TRUE(mean_estimate(v).within(ch.laplace_T0(1.0, 1.0), 4));
}

TEST(Chain, DegenerateGridIsRejected) {
    const DiffusionSpec bm = make_bm_drift(40.0);
    EXPECT_THROW(BirthDeathChain(bm, 1.0, 5.0), Error);
}

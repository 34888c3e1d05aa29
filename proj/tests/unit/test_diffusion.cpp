#include <gtest/gtest.h>

#include <cmath>

#include "scaleclock/diffusion.hpp"

using namespace scaleclock;

TEST(Builtins, DensitiesAndCoefficients) {
    const DiffusionSpec bm = make_bm_drift(1.0);
    EXPECT_DOUBLE_EQ(bm.speed.density(0.0), 2.0);
    EXPECT_DOUBLE_EQ(bm.scale.slope(0.0), 1.0);
    EXPECT_EQ(bm.label, "bm_drift(1)");
    const DiffusionSpec ou = make_ou(1.0);
    EXPECT_DOUBLE_EQ(ou.speed.density(0.0), 2.0);
    EXPECT_DOUBLE_EQ(ou.sde->drift(2.0), -2.0);
    EXPECT_EQ(ou.label, "ou(1)");
    for (double c : {0.5, 1.0, 2.0}) {
        EXPECT_NO_THROW(validate_spec(make_bm_drift(c)));
        EXPECT_NO_THROW(validate_spec(make_ou(c)));
    }
    EXPECT_THROW(make_bm_drift(0.0), Error);
    EXPECT_THROW(make_ou(-1.0), Error);
}

TEST(Builtins, InconsistentSdeIsRejected) {
    DiffusionSpec bm = make_bm_drift(1.0);
    bm.sde->drift = [](double) { return -0.9; };
    try {
        validate_spec(bm);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::parameter);
    }
}

TEST(Builtins, OuScaleMatchesQuadratureAndAsymptotics) {
    for (double c : {0.5, 1.0, 2.0}) {
        const DiffusionSpec ou = make_ou(c);
        for (double x : {0.3, 1.0, 2.5}) {
            const double ref = integrate([c](double u) { return std::exp(c * u * u); }, 0.0, x, 1e-13).value;
            EXPECT_NEAR(ou.scale.value(x) / ref, 1.0, 1e-10) << c << " " << x;
        }
        // either side of the table/asymptotic switch at c x² = 40
        const double xs = std::sqrt(40.0 / c);
        const double d = 1e-6 * xs;
        const double jump = ou.scale.log_value(xs + d) - ou.scale.log_value(xs - d);
        const double expected = 2 * d * ou.scale.slope(xs) / ou.scale.value(xs);
        EXPECT_NEAR(jump, expected, 1e-9);
    }
}

TEST(Classify, BuiltinsAreRegularAtZeroNaturalAtInfinity) {
    for (const DiffusionSpec& spec : {make_bm_drift(1.0), make_ou(1.0)}) {
        for (double c_ref : {0.5, 1.0, 2.0}) {
            EXPECT_EQ(classify_boundary(spec, Boundary::zero, c_ref).kind, BoundaryKind::regular) << spec.label;
            EXPECT_EQ(classify_boundary(spec, Boundary::infinity, c_ref).kind, BoundaryKind::natural) << spec.label;
        }
    }
}

TEST(Classify, InvariantUnderNaturalScale) {
    for (const DiffusionSpec& spec : {make_bm_drift(1.0), make_ou(1.0)}) {
        const NaturalScaleMap n = to_natural_scale(spec);
        for (Boundary b : {Boundary::zero, Boundary::infinity})
            EXPECT_EQ(classify_boundary(spec, b).kind, classify_boundary(n.spec, b).kind) << spec.label;
    }
}

TEST(Classify, TextbookCells) {
    // reflected BM in natural scale: 0 regular, ∞ natural
    DiffusionSpec bm;
    bm.speed = Measure1D([](double) { return 2.0; }, [](double) { return std::log(2.0); });
    EXPECT_EQ(classify_boundary(bm, Boundary::zero).kind, BoundaryKind::regular);
    EXPECT_EQ(classify_boundary(bm, Boundary::infinity).kind, BoundaryKind::natural);
    // Bessel(3) in natural scale for 1/x: dm = 2x² dx, ds = x^{-2} dx gives 0 entrance
    DiffusionSpec bes;
    ScaleFn::Parts p;
    p.slope = [](double x) { return 1.0 / (x * x); };
    p.log_slope = [](double x) { return -2 * std::log(x); };
    bes.scale = ScaleFn(p, 1.0);
    bes.speed = Measure1D({}, [](double x) { return std::log(2.0) + 2 * std::log(x); });
    EXPECT_EQ(classify_boundary(bes, Boundary::zero).kind, BoundaryKind::entrance);
    EXPECT_EQ(classify_boundary(bes, Boundary::infinity).kind, BoundaryKind::natural);
}

TEST(NaturalScale, ForwardMapAndRoundTrip) {
    const double c = 1.0;
    const NaturalScaleMap n = to_natural_scale(make_bm_drift(c));
    for (double x : {0.1, 1.0, 5.0}) {
        // oracle: antiderivative of e^{2cx} vanishing at 0
        EXPECT_NEAR(n.forward(x) / ((std::exp(2 * c * x) - 1) / (2 * c)), 1.0, 1e-12);
        EXPECT_NEAR(n.inverse(n.forward(x)), x, 1e-9);
    }
    const NaturalScaleMap o = to_natural_scale(make_ou(1.0));
    for (double x : {0.1, 1.0, 5.0}) EXPECT_NEAR(o.inverse(o.forward(x)), x, 1e-9);
    const NaturalScaleMap id = to_natural_scale(n.spec);
    EXPECT_EQ(id.forward(3.7), 3.7);
    EXPECT_EQ(id.inverse(3.7), 3.7);
}

TEST(NaturalScale, PushforwardSpeedPreservesMass) {
    const DiffusionSpec ou = make_ou(1.0);
    const NaturalScaleMap n = to_natural_scale(ou);
    const double a = n.forward(0.5), b = n.forward(1.5);
    const double pushed = integrate([&](double xi) { return std::exp(n.spec.speed.log_density(xi)); }, a, b, 1e-11).value;
    EXPECT_NEAR(pushed / ou.speed.mass(0.5, 1.5), 1.0, 1e-8);
}

TEST(Lambda0Positivity, BuiltinsHoldReflectedBmFails) {
    EXPECT_TRUE(lambda0_positivity_check(to_natural_scale(make_bm_drift(1.0)).spec).holds);
    EXPECT_TRUE(lambda0_positivity_check(to_natural_scale(make_ou(1.0)).spec).holds);
    DiffusionSpec leb;
    leb.speed = Measure1D([](double) { return 1.0; }, [](double) { return 0.0; });
    const PositivityEvidence ev = lambda0_positivity_check(leb);
    EXPECT_FALSE(ev.holds);
    EXPECT_TRUE(ev.m_tail.divergent());
    EXPECT_THROW(lambda0_positivity_check(make_bm_drift(1.0)), Error);
}

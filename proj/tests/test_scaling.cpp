#include "pxspk/medium.hpp"
#include "pxspk/scaling.hpp"
#include "support.hpp"

using namespace pxspk;

TEST_CASE("regime_from_theta couples epsilon and eta")
{
    const auto diff = regime_from_theta(1e-4, 1.0, RegimeKind::Diffusive, 1.0);
    CHECK(diff.epsilon == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(diff.eta == doctest::Approx(1.0 / std::log(std::log(1e4))).epsilon(1e-14));
    CHECK(diff.eta == doctest::Approx(0.45038).epsilon(1e-5));
    CHECK(!diff.violation());

    const auto kin = regime_from_theta(0.01, 1.0, RegimeKind::Kinetic, 1.0);
    CHECK(kin.eta == 1.0);
    CHECK(kin.epsilon == doctest::Approx(0.01));

    const auto edge = regime_from_theta(0.25, 2.0, RegimeKind::Kinetic, 1.0);
    CHECK(edge.epsilon == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(!edge.violation());

    CHECK_THROWS_AS(regime_from_theta(0.0, 1.0, RegimeKind::Kinetic, 1.0), Error);
    CHECK_THROWS_AS(regime_from_theta(0.6, 1.0, RegimeKind::Kinetic, 1.0), Error);
    CHECK_THROWS_AS(regime_from_theta(0.4, 2.0, RegimeKind::Kinetic, 1.0), Error); // epsilon ~ 0.63
    CHECK_THROWS_AS(regime_from_theta(0.1, 1.0, RegimeKind::Kinetic, 0.5), Error);
    CHECK_THROWS_AS(regime_from_theta(0.1, -1.0, RegimeKind::Kinetic, 1.0), Error);
}

TEST_CASE("diffusive eta is monotone in theta")
{
    Real prev = 0.0;
    for (Real theta : {1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2})
    {
        const auto r = regime_from_theta(theta, 1.0, RegimeKind::Diffusive, 1.0);
        CHECK(r.eta >= prev);
        prev = r.eta;
    }
}

TEST_CASE("regime kind names round trip")
{
    for (RegimeKind k : {RegimeKind::Kinetic, RegimeKind::Diffusive, RegimeKind::Custom})
        CHECK(regime_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(regime_kind_from_string("ballistic"), Error);
}

TEST_CASE("physical scenario from the laser example")
{
    PhysicalScenario s;
    s.l0 = 2e-3;
    s.k0 = 2e4 / s.l0;
    s.Z = 2.5e5;
    s.w0 = s.Z / s.k0; // eta = 1
    s.sigma = std::sqrt(s.w0 * s.w0 / (s.Z * s.Z * s.Z * s.l0 * s.l0));
    const auto p = physical_to_dimensionless(s);
    CHECK(p.theta == doctest::Approx(5e-5).epsilon(1e-12));
    CHECK(p.eta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.epsilon == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(p.epsilon == doctest::Approx(p.eta * s.k0 * s.l0 / s.Z).epsilon(1e-12));
    CHECK(p.consistency_residual < 1e-12);
    CHECK(p.wide_beam);

    PhysicalScenario narrow = s;
    narrow.w0 = narrow.l0;
    const auto q = physical_to_dimensionless(narrow);
    CHECK(q.epsilon == doctest::Approx(1.0));
    CHECK(!q.wide_beam);

    PhysicalScenario bad = s;
    bad.k0 = 0.0;
    CHECK_THROWS_AS(physical_to_dimensionless(bad), Error);
}

TEST_CASE("physical scaling identity under a common length factor")
{
    PhysicalScenario s{3e6, 1e-3, 4e-2, 1e4, 1e-5};
    const auto base = physical_to_dimensionless(s);
    for (Real c : {0.5, 2.0, 7.0})
    {
        PhysicalScenario t = s;
        t.l0 *= c;
        t.w0 *= c;
        const auto p = physical_to_dimensionless(t);
        CHECK(p.theta == doctest::Approx(base.theta / c).epsilon(1e-14));
        CHECK(p.epsilon == doctest::Approx(base.epsilon).epsilon(1e-14));
        CHECK(p.eta == doctest::Approx(base.eta / c).epsilon(1e-14));
    }
}

TEST_CASE("validate_assumptions on the Gaussian family")
{
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 1.0, 1);
    const auto rep = validate_assumptions(spec, regime_from_theta(0.05, 1.0, RegimeKind::Kinetic, 1.0));
    CHECK(rep.all_passed());
    for (const char* name : {"spectrum_nonnegative", "spectral_moment_finite", "hessian_negative_definite",
                             "covariance_maximal_at_origin", "regime_invariants", "regime_coupling"})
        CHECK(rep.find(name) != nullptr);
    CHECK(rep.small_parameter_metric > 0.0);

    const auto spec2 = MediumSpec::gaussian(0.5, 2.0, 3.0, 2);
    CHECK(validate_assumptions(spec2, regime_from_theta(1e-3, 1.0, RegimeKind::Diffusive, 1.0)).all_passed());

    const auto loose = custom_regime(0.2, 0.1, 1.0, 1.0, 1.0);
    const auto bad = validate_assumptions(spec, loose);
    CHECK(!bad.all_passed());
    REQUIRE(bad.find("regime_coupling") != nullptr);
    CHECK(!bad.find("regime_coupling")->passed);
    CHECK(bad.find("hessian_negative_definite")->passed);
}

TEST_CASE("small-parameter metric follows theta^alpha exp(C/eta^2)")
{
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 1.0, 1);
    const auto r = regime_from_theta(1e-3, 1.0, RegimeKind::Diffusive, 1.0);
    ValidationOptions o;
    o.alpha = 0.5;
    o.metric_constant = 0.2;
    const auto rep = validate_assumptions(spec, r, o);
    CHECK(rep.small_parameter_metric ==
          doctest::Approx(std::pow(r.theta, 0.5) * std::exp(0.2 / (r.eta * r.eta))).epsilon(1e-12));
}

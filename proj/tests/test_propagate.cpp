#include "pxspk/propagate.hpp"
#include "pxspk/quadrature.hpp"
#include "support.hpp"

#include <sstream>

using namespace pxspk;
using pxspk::test::rel_l2;

namespace
{

// a = eta/eps = 10, source width 10 on a 256-long domain with 4 points per unit.
const ScalingRegime desk = custom_regime(0.1, 0.1, 1.0, 1.0);
const Grid fine(1, 1024, 256.0, 1.0 / 64);
const SourceSpec beam = SourceSpec::gaussian(1.0);

ErrorCode code_of(const std::function<void()>& f)
{
    try
    {
        f();
    }
    catch (const Error& e)
    {
        return e.code();
    }
    return ErrorCode::InvalidParameter;
}

} // namespace

TEST_CASE("make_source samples the rescaled profile")
{
    const auto u = make_source(beam, desk, fine);
    const Index mid = fine.n / 2;
    CHECK(u.values(mid) == Complex(1.0));
    for (Index i = 0; i < fine.size(); i += 37)
    {
        const Real x = fine.coordinate(i);
        CHECK(std::abs(u.values(i) - std::exp(-0.5 * (0.1 * x) * (0.1 * x))) < 1e-15);
    }
    CHECK(u.z == 0.0);

    // epsilon = 1 is the identity scaling (outside the asymptotic range, so set directly).
    ScalingRegime unit = desk;
    unit.epsilon = 1.0;
    const Grid small(1, 64, 16.0, 0.1);
    const auto v = make_source(SourceSpec::gaussian(1.0, Complex(0.0, 2.0)), unit, small);
    for (Index i = 0; i < small.size(); ++i)
        CHECK(std::abs(v.values(i) - Complex(0.0, 2.0) * std::exp(-0.5 * small.coordinate(i) * small.coordinate(i))) <
              1e-15);

    CHECK(code_of([&] { make_source(beam, desk, Grid(1, 64, 64.0, 0.1)); }) == ErrorCode::DomainTooSmall);
}

TEST_CASE("large beta approaches a plane wave on a fixed window")
{
    const Grid wide(1, 1024, 8192.0, 0.1);
    Real prev = 1.0;
    for (Real beta : {1.0, 2.0, 3.0})
    {
        const auto r = custom_regime(0.1, 0.1, 1.0, beta);
        const auto u = make_source(beam, r, wide);
        Real dev = 0.0;
        for (Index i = 0; i < wide.size(); ++i)
            if (std::abs(wide.coordinate(i)) <= 64.0)
                dev = std::max(dev, std::abs(u.values(i) - 1.0));
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev < 3e-3);
}

TEST_CASE("diffraction_step is unitary and matches the Fresnel solution")
{
    const auto u0 = make_source(beam, desk, fine);
    const auto same = diffraction_step(u0, 0.0);
    CHECK((same.values - u0.values).norm() < 1e-14 * u0.values.norm());

    Field u = u0;
    for (int s = 0; s < 64; ++s)
    {
        u = diffraction_step(std::move(u), fine.dz);
        CHECK(std::abs(u.l2_norm() / u0.l2_norm() - 1.0) < 1e-12);
    }
    CHECK(u.z == doctest::Approx(1.0));
    CHECK(rel_l2(u.values, free_space_field(beam, desk, 1.0, fine)) < 1e-8);

    const Grid two(2, 128, 128.0, 0.25);
    const auto r2 = custom_regime(0.1, 0.1, 1.0, 1.0);
    Field w = make_source(beam, r2, two);
    for (int s = 0; s < 4; ++s)
        w = diffraction_step(std::move(w), two.dz);
    CHECK(rel_l2(w.values, free_space_field(beam, r2, 1.0, two)) < 1e-8);
}

TEST_CASE("free_space closed form")
{
    const VectorXr x0 = VectorXr::Constant(1, 3.0);
    CHECK(std::abs(free_space(beam, desk, 0.0, x0) - std::exp(-0.5 * 0.09)) < 1e-15);
    // Mass is independent of z.
    auto mass = [&](Real z) {
        return integrate(
                   [&](Real x) { return std::norm(free_space(beam, desk, z, VectorXr::Constant(1, x))); }, -kInf, kInf)
            .value;
    };
    const Real m0 = mass(0.0);
    for (Real z : {0.5, 2.0, 10.0})
        CHECK(std::abs(mass(z) / m0 - 1.0) < 1e-10);
    // Width grows by |q|/s^2 with q = s^2 + 2 i a z.
    const Real s = 10.0, a = 10.0, z = 3.0;
    const Real w2 = std::norm(Complex(s * s, 2.0 * a * z)) / (s * s);
    const Real peak = std::norm(free_space(beam, desk, z, VectorXr::Zero(1)));
    CHECK(peak == doctest::Approx(s / std::sqrt(w2)).epsilon(1e-12));

    const auto custom = SourceSpec::from_function([](const VectorXr&) { return Complex(1.0); }, 1.0);
    CHECK(code_of([&] { free_space(custom, desk, 1.0, x0); }) == ErrorCode::UnsupportedProfile);
}

TEST_CASE("phase_screen_step is pointwise unimodular")
{
    const auto u0 = make_source(beam, desk, fine);
    PhaseScreen zero;
    zero.values = VectorXr::Zero(fine.size());
    CHECK(phase_screen_step(u0, zero).values == u0.values);

    PhaseScreen s;
    s.values = VectorXr::LinSpaced(fine.size(), -3.0, 7.0);
    const auto v = phase_screen_step(u0, s);
    for (Index i = 0; i < fine.size(); ++i)
        CHECK(std::abs(std::abs(v.values(i)) - std::abs(u0.values(i))) <= 1e-15 * std::abs(u0.values(i)) + 1e-300);

    PhaseScreen bad;
    bad.values = VectorXr::Zero(10);
    CHECK(code_of([&] { phase_screen_step(u0, bad); }) == ErrorCode::GridMismatch);
}

TEST_CASE("gauge covariance: a constant screen offset is a global phase")
{
    const Grid g(1, 256, 256.0, 0.01);
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 2.0, 1);
    Field a = make_source(beam, desk, g), b = a;
    const Real c = 0.37;
    for (int s = 0; s < 20; ++s)
    {
        auto scr = brownian_screen(spec, g, g.dz, 1.0, SeedPath{8, 0, std::uint32_t(s), StreamPurpose::BrownianScreen});
        a = diffraction_step(phase_screen_step(std::move(a), scr), g.dz);
        scr.values.array() += c;
        b = diffraction_step(phase_screen_step(std::move(b), scr), g.dz);
    }
    const Complex g20 = std::polar(1.0, 20 * c);
    CHECK((b.values - g20 * a.values).norm() < 1e-12 * a.values.norm());
    CHECK((b.values.cwiseAbs2() - a.values.cwiseAbs2()).norm() < 1e-12 * a.values.cwiseAbs2().norm());
}

TEST_CASE("phase_compensate undoes free-space evolution")
{
    const auto u0 = make_source(beam, desk, fine);
    const VectorXc s0 = field_spectrum(u0);
    const VectorXc c0 = phase_compensate(u0);
    CHECK((c0 - s0).norm() <= 1e-14 * s0.norm());

    Field u = u0;
    for (int s = 0; s < 64; ++s)
        u = diffraction_step(std::move(u), fine.dz);
    const VectorXc su = field_spectrum(u);
    const VectorXc cu = phase_compensate(u);
    CHECK((cu - s0).norm() <= 1e-12 * s0.norm());
    CHECK((cu.cwiseAbs() - su.cwiseAbs()).norm() <= 1e-14 * su.norm());

    // The continuous transform of the Gaussian: s sqrt(2 pi) exp(-xi^2 s^2 / 2).
    for (Index m : {0, 1, 5, 20})
    {
        const Real xi = fine.wavenumber(m);
        CHECK(std::abs(s0(m) - 10.0 * std::sqrt(kTwoPi) * std::exp(-0.5 * xi * xi * 100.0)) < 1e-10);
    }
}

TEST_CASE("sample_macroscopic and periodic interpolation")
{
    const auto u0 = make_source(beam, desk, fine);
    const VectorXr r0 = VectorXr::Zero(1);
    const VectorXc at0 = sample_macroscopic(u0, r0, MatrixXr::Zero(1, 1));
    CHECK(std::abs(at0(0) - Complex(1.0)) < 1e-12);

    // Off-grid probes against the exact profile (band-limited to round-off).
    MatrixXr X(1, 4);
    X << 0.13, -7.7, 21.05, 3.3;
    const VectorXr r = VectorXr::Constant(1, 0.5);
    const VectorXc got = sample_macroscopic(u0, r, X);
    for (Index j = 0; j < X.cols(); ++j)
    {
        const Real xp = 0.5 / 0.1 + X(0, j);
        CHECK(std::abs(got(j) - std::exp(-0.5 * (0.1 * xp) * (0.1 * xp))) < 1e-12);
    }

    // Grid-aligned points reproduce stored samples.
    Field noisy = u0;
    CounterStream rng(SeedPath{1, 2, 3, StreamPurpose::Synthetic});
    for (Index i = 0; i < fine.size(); ++i)
        noisy.values(i) = rng.complex_normal();
    MatrixXr nodes(1, 6);
    for (int j = 0; j < 6; ++j)
        nodes(0, j) = fine.coordinate(100 * j + 3);
    const VectorXc v = interpolate_periodic(noisy, nodes);
    for (int j = 0; j < 6; ++j)
        CHECK(std::abs(v(j) - noisy.values(100 * j + 3)) < 1e-12);

    // Shifting by a period aliases to the same value.
    MatrixXr pts(1, 3);
    pts << 0.37, -100.2, 55.5;
    const VectorXc base = interpolate_periodic(noisy, pts);
    const VectorXc shifted = interpolate_periodic(noisy, (pts.array() + fine.length).matrix());
    CHECK((base - shifted).norm() < 1e-9);

    CHECK(code_of([&] { sample_macroscopic(u0, VectorXr::Constant(1, 12.79), MatrixXr::Zero(1, 1)); }) ==
          ErrorCode::PointOutsideDomain);
    CHECK(code_of([&] { sample_macroscopic(u0, r0, MatrixXr::Constant(1, 1, 120.0), 10.0); }) ==
          ErrorCode::PointOutsideDomain);

    const Grid g2(2, 64, 64.0, 0.1);
    Field w = make_source(beam, custom_regime(0.1, 0.25, 1.0, 1.0), g2);
    MatrixXr p2(2, 2);
    p2 << 1.1, -3.0, 0.4, 2.2;
    const VectorXc w2 = sample_macroscopic(w, VectorXr::Zero(2), p2);
    for (int j = 0; j < 2; ++j)
        CHECK(std::abs(w2(j) - std::exp(-0.5 * 0.0625 * p2.col(j).squaredNorm())) < 1e-10);
}

TEST_CASE("wraparound monitor")
{
    const auto u0 = make_source(beam, desk, fine);
    CHECK(wraparound_mass(u0) < 1e-20);
    Field edge = u0;
    edge.values.setZero();
    edge.values(0) = 1.0;
    CHECK(wraparound_mass(edge) == doctest::Approx(1.0));
}

TEST_CASE("vacuum solvers reproduce the free-space oracle")
{
    const auto vac = MediumSpec::vacuum(1);
    const auto u0 = make_source(beam, desk, fine);
    const auto exact = free_space_field(beam, desk, 1.0, fine);
    const auto ito = propagate_ito(u0, vac, desk, 1.0, SeedPath{1});
    CHECK(rel_l2(ito.field.values, exact) < 1e-8);
    const auto par = propagate_paraxial(u0, vac, desk, 1.0, SeedPath{1});
    CHECK(rel_l2(par.field.values, exact) < 1e-8);
    PropagationOptions lie;
    lie.splitting = Splitting::Lie;
    CHECK(rel_l2(propagate_ito(u0, vac, desk, 1.0, SeedPath{1}, lie).field.values, exact) < 1e-8);
}

TEST_CASE("solvers conserve the norm per realization")
{
    const Grid g(1, 512, 256.0, 1.0 / 1000);
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 2.0, 1);
    const auto u0 = make_source(beam, desk, g);
    for (auto split : {Splitting::Strang, Splitting::Lie})
    {
        PropagationOptions o;
        o.splitting = split;
        o.checkpoints = {0.25, 0.5, 1.0};
        const auto ito = propagate_ito(u0, spec, desk, 1.0, SeedPath{2, 0}, o);
        CHECK(ito.max_norm_drift < 1e-10);
        CHECK(std::abs(ito.field.l2_norm() / u0.l2_norm() - 1.0) < 1e-10);
    }
    const auto reg = custom_regime(0.05, 0.1, 1.0, 1.0);
    const Grid gp(1, 1024, 256.0, paraxial_step_bound(spec, reg));
    const auto par = propagate_paraxial(make_source(beam, reg, gp), spec, reg, gp.dz * 1000, SeedPath{2, 0});
    CHECK(par.max_norm_drift < 1e-10);
}

TEST_CASE("step bounds are enforced")
{
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 2.0, 1);
    const auto u0 = make_source(beam, desk, fine);
    CHECK(ito_step_bound(desk, fine) == doctest::Approx(0.25 * kPi * 0.1 / std::pow(kPi / fine.dx(), 2)));
    Field coarse = u0;
    coarse.grid.dz = 0.1;
    CHECK(code_of([&] { propagate_ito(coarse, spec, desk, 1.0, {}); }) == ErrorCode::StepTooCoarse);
    CHECK(paraxial_step_bound(spec, desk) == doctest::Approx(1.0 * 0.1 * 0.1 / 4.0));
    CHECK(code_of([&] { propagate_paraxial(coarse, spec, desk, 1.0, {}); }) == ErrorCode::StepTooCoarse);
    CHECK(code_of([&] { propagate_ito(u0, MediumSpec::vacuum(1), desk, 1.0 + 0.3 * fine.dz, {}); }) ==
          ErrorCode::InvalidParameter);
    CHECK(paraxial_block_slabs(spec, 0.25) == 64);
    CHECK(paraxial_block_slabs(spec, 1.0) == 16);
    CHECK(paraxial_block_slabs(spec, 10.0) == 8);
}

TEST_CASE("realizations are reproducible and observers fire at checkpoints")
{
    const Grid g(1, 256, 256.0, 1.0 / 128);
    const auto spec = MediumSpec::gaussian(1.0, 1.0, 2.0, 1);
    const auto u0 = make_source(beam, desk, g);
    PropagationOptions o;
    o.checkpoints = {0.25, 0.5};
    o.keep_snapshots = true;
    std::vector<Real> seen;
    o.observer = [&](const Field& f) { seen.push_back(f.z); };
    const auto a = propagate_ito(u0, spec, desk, 0.5, SeedPath{4, 7}, o);
    const auto b = propagate_ito(u0, spec, desk, 0.5, SeedPath{4, 7}, {});
    const auto b2 = propagate_ito(u0, spec, desk, 0.5, SeedPath{4, 7}, {});
    CHECK(b2.field.values == b.field.values);
    // Checkpoints split the merged half drifts, which changes rounding only.
    CHECK((a.field.values - b.field.values).norm() < 1e-12 * b.field.values.norm());
    REQUIRE(seen.size() == 2);
    CHECK(seen[0] == doctest::Approx(0.25));
    REQUIRE(a.snapshots.size() == 2);
    CHECK(a.snapshots[1].values == a.field.values);
    const auto c = propagate_ito(u0, spec, desk, 0.5, SeedPath{4, 8}, {});
    CHECK(c.field.values != a.field.values);

    const auto reg = custom_regime(0.1, 0.1, 1.0, 1.0);
    Field p0 = u0;
    p0.grid.dz = paraxial_step_bound(spec, reg) / 2;
    const auto p1 = propagate_paraxial(p0, spec, reg, 40 * p0.grid.dz, SeedPath{4, 7});
    const auto p2 = propagate_paraxial(p0, spec, reg, 40 * p0.grid.dz, SeedPath{4, 7});
    CHECK(p1.field.values == p2.field.values);

    PropagationOptions badck;
    badck.checkpoints = {0.7};
    CHECK(code_of([&] { propagate_ito(u0, spec, desk, 0.5, {}, badck); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("Ito ensemble mean follows the damped free-space field")
{
    const Grid g(1, 256, 256.0, 1.0 / 128);
    const auto spec = MediumSpec::gaussian(0.6, 1.0, 2.0, 1);
    const auto u0 = make_source(beam, desk, g);
    const Real z = 0.5;
    const int n = 600;
    const std::vector<Index> probe = {100, 120, 128, 131, 140, 150, 160, 90, 110, 135};
    VectorXc sum = VectorXc::Zero(Index(probe.size()));
    VectorXr sum2 = VectorXr::Zero(Index(probe.size()));
    for (int i = 0; i < n; ++i)
    {
        const auto p = propagate_ito(u0, spec, desk, z, SeedPath{21, std::uint32_t(i)});
        for (std::size_t j = 0; j < probe.size(); ++j)
        {
            sum(Index(j)) += p.field.values(probe[j]);
            sum2(Index(j)) += std::norm(p.field.values(probe[j]));
        }
    }
    const VectorXc exact = std::exp(-spec.R0() * z / 2.0) * free_space_field(beam, desk, z, g);
    for (std::size_t j = 0; j < probe.size(); ++j)
    {
        const Complex m = sum(Index(j)) / Real(n);
        const Real se = std::sqrt((sum2(Index(j)) / n - std::norm(m)) / (n - 1));
        CHECK(std::abs(m - exact(probe[j])) <= 3.0 * se);
    }
}

TEST_CASE("snapshot round trip")
{
    const auto u0 = make_source(beam, desk, fine);
    const auto f = diffraction_step(u0, 0.3);
    std::stringstream ss;
    write_snapshot(ss, f);
    CHECK(ss.str().substr(0, 6) == "PXFLD1");
    const auto g = read_snapshot(ss);
    CHECK(g.values == f.values);
    CHECK(g.z == f.z);
    CHECK(g.grid.same_transverse(f.grid));
    CHECK(g.grid.dz == f.grid.dz);
    CHECK(g.regime.epsilon == f.regime.epsilon);
    std::stringstream junk("PXSPK1....");
    CHECK(code_of([&] { read_snapshot(junk); }) == ErrorCode::ParseError);
}

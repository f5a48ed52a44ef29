#include "pxspk/stats.hpp"
#include "support.hpp"

#include <cstdlib>
#include <sstream>

using namespace pxspk;

namespace
{

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

SeedPath synthetic(std::uint64_t seed, std::uint32_t realization = 0)
{
    return SeedPath{seed, realization, 0, StreamPurpose::Synthetic};
}

RowMatrixXc unit_circular(Index n, std::uint64_t seed)
{
    CounterStream rng(synthetic(seed));
    RowMatrixXc s(n, 1);
    for (Index i = 0; i < n; ++i)
        s(i, 0) = rng.complex_normal();
    return s;
}

VectorXr exponential_samples(Index n, Real mean, std::uint64_t seed)
{
    CounterStream rng(synthetic(seed));
    VectorXr v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = rng.exponential(mean);
    return v;
}

Probe line_probe(Real r, std::initializer_list<Real> xs)
{
    Probe p;
    p.r = VectorXr::Constant(1, r);
    p.X.resize(1, Index(xs.size()));
    Index j = 0;
    for (Real x : xs)
        p.X(0, j++) = x;
    return p;
}

} // namespace

TEST_CASE("Philox4x32-10 known-answer vectors")
{
    CHECK(philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u}) ==
          PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter streams are addressed by their seed path")
{
    CounterStream a(synthetic(5, 3)), b(synthetic(5, 3)), c(synthetic(5, 4));
    CounterStream d(synthetic(5, 3).with_purpose(StreamPurpose::BrownianScreen));
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 64; ++i)
    {
        const auto x = a.next_u32();
        CHECK(x == b.next_u32());
        differs_c |= x != c.next_u32();
        differs_d |= x != d.next_u32();
    }
    CHECK(differs_c);
    CHECK(differs_d);

    CounterStream u(synthetic(9));
    Real lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
    {
        const Real v = u.uniform();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("estimate_moment on constant and circular Gaussian samples")
{
    RowMatrixXc c = RowMatrixXc::Constant(50, 2, Complex(0.3, -1.2));
    const auto e = estimate_moment(c, {0}, {});
    CHECK(std::abs(e.value - Complex(0.3, -1.2)) < 1e-15);
    CHECK(e.std_error < 1e-15);
    CHECK(e.n_samples == 50);
    const auto e2 = estimate_moment(c, {0, 1}, {1});
    CHECK(std::abs(e2.value - Complex(0.3, -1.2) * std::norm(Complex(0.3, -1.2))) < 1e-14);

    const RowMatrixXc g = unit_circular(100000, 11);
    const auto m11 = estimate_moment(g, {0}, {0});
    CHECK(std::abs(m11.value - 1.0) <= 3.0 * m11.std_error);
    CHECK(m11.std_error > 0.0);
    const auto m20 = estimate_moment(g, {0, 0}, {});
    CHECK(std::abs(m20.value) <= 3.0 * m20.std_error);

    CHECK(code_of([] { estimate_moment(RowMatrixXc::Ones(1, 1), {0}, {}); }) == ErrorCode::InsufficientSamples);
    CHECK(code_of([&] { estimate_moment(c, {2}, {}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("jackknife error of the mean equals the classical standard error")
{
    VectorXc v(6);
    v << 1.0, 2.0, Complex(0, 3), -1.0, 0.5, Complex(2, -2);
    const auto e = mean_estimate(v);
    const Complex m = v.mean();
    Real ss = 0.0;
    for (Index i = 0; i < v.size(); ++i)
        ss += std::norm(v(i) - m);
    CHECK(e.std_error == doctest::Approx(std::sqrt(ss / (6.0 * 5.0))).epsilon(1e-13));
}

TEST_CASE("scintillation index")
{
    const auto flat = scintillation_index(VectorXr::Constant(1000, 2.5));
    CHECK(flat.value.real() == 0.0);
    CHECK(flat.std_error < 1e-12);

    for (Real mean : {1.0, 0.2})
    {
        const auto s = scintillation_index(exponential_samples(100000, mean, 21));
        CHECK(std::abs(s.value.real() - 1.0) <= 3.0 * s.std_error);
        CHECK(s.std_error > 0.0);
    }
    CHECK(code_of([] { scintillation_index(VectorXr::Zero(10)); }) == ErrorCode::DegenerateIntensity);
    CHECK(code_of([] { scintillation_index(VectorXr::Ones(1)); }) == ErrorCode::InsufficientSamples);
}

TEST_CASE("KS exponential test: calibration, power and degenerate samples")
{
    const auto cal = calibrate_ks(10000, 100, 31);
    CHECK(cal.pass_fraction >= 0.95);
    CHECK(cal.critical_statistic > 0.0);
    // Same seed reproduces the calibration.
    const auto again = calibrate_ks(10000, 100, 31);
    CHECK(again.critical_statistic == cal.critical_statistic);

    CounterStream rng(synthetic(41));
    VectorXr uni(10000);
    for (Index i = 0; i < uni.size(); ++i)
        uni(i) = 2.0 * rng.uniform();
    const auto bad = ks_exponential(uni);
    CHECK(bad.p_value < 0.01);

    const auto eq = ks_exponential(VectorXr::Constant(200, 3.0));
    CHECK(eq.statistic == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(eq.p_value < 0.01);
    CHECK(!eq.note.empty());

    CHECK(code_of([] { ks_exponential(VectorXr::Ones(49)); }) == ErrorCode::InsufficientSamples);
}

TEST_CASE("Kolmogorov survival function")
{
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(1.3580986) == doctest::Approx(0.05).epsilon(1e-4));
    CHECK(kolmogorov_survival(1.6276236) == doctest::Approx(0.01).epsilon(1e-4));
    Real prev = 1.0;
    for (Real t = 0.1; t < 3.0; t += 0.05)
    {
        const Real p = kolmogorov_survival(t);
        CHECK(p >= 0.0);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("circularity test")
{
    const Index n = 20000;
    const RowMatrixXc g = unit_circular(n, 51);
    const auto circ = circularity_test(g.col(0));
    CHECK(circ.statistic <= 3.0 / std::sqrt(Real(n)));
    CHECK(circ.p_value > 0.0);

    CounterStream rng(synthetic(52));
    VectorXc real(n);
    for (Index i = 0; i < n; ++i)
        real(i) = rng.normal();
    const auto r = circularity_test(real);
    CHECK(r.statistic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_value < 1e-6);

    const auto det = circularity_test(VectorXc::Constant(100, Complex(0.6, 0.8)));
    CHECK(det.statistic == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(code_of([] { circularity_test(VectorXc::Ones(99)); }) == ErrorCode::InsufficientSamples);
}

TEST_CASE("independence test")
{
    const Index n = 20000;
    const RowMatrixXc a = unit_circular(n, 61);
    const RowMatrixXc b = unit_circular(n, 62);
    const auto ind = independence_test(VectorXc(a.col(0)), VectorXc(b.col(0)));
    CHECK(std::abs(ind.statistic) <= 3.0 / std::sqrt(Real(n)));
    CHECK(ind.p_value >= 0.0);
    CHECK(ind.p_value <= 1.0);

    const auto same = independence_test(VectorXc(a.col(0)), VectorXc(a.col(0)));
    CHECK(same.statistic == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.p_value == 0.0);

    CHECK(code_of([] { independence_test(VectorXr(VectorXr::Ones(100)), VectorXr(VectorXr::Ones(99))); }) ==
          ErrorCode::InvalidParameter);
    CHECK(code_of([] { independence_test(VectorXr(VectorXr::Ones(50)), VectorXr(VectorXr::Ones(50))); }) ==
          ErrorCode::InsufficientSamples);
}

TEST_CASE("p-values stay in the unit interval")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        const VectorXr e = exponential_samples(200 + Index(seed) * 7, 1.0 + Real(seed), seed);
        const auto ks = ks_exponential(e);
        CHECK(ks.p_value >= 0.0);
        CHECK(ks.p_value <= 1.0);
        const RowMatrixXc g = unit_circular(100 + Index(seed), seed);
        const auto c = circularity_test(g.col(0));
        CHECK(c.p_value >= 0.0);
        CHECK(c.p_value <= 1.0);
        const auto i = independence_test(VectorXr(e.head(100)), VectorXr(e.tail(100).reverse()));
        CHECK(i.p_value >= 0.0);
        CHECK(i.p_value <= 1.0);
        const auto j = independence_test(VectorXr(g.col(0).real().head(100)), VectorXr(g.col(0).imag().head(100)));
        CHECK(j.p_value >= 0.0);
        CHECK(j.p_value <= 1.0);
    }
}

TEST_CASE("Hoelder increment probe")
{
    // phi(x) = exp(i x) + x^2 at x = 0.3, increments h along the line
    const std::vector<Real> h = {0.0, 1e-3, 2e-3, 4e-3, 8e-3};
    auto phi = [](Real x) { return std::polar(1.0, x) + x * x; };
    RowMatrixXc s(3, Index(h.size()) + 1);
    for (Index i = 0; i < s.rows(); ++i)
    {
        s(i, 0) = phi(0.3);
        for (std::size_t j = 0; j < h.size(); ++j)
            s(i, Index(j) + 1) = phi(0.3 + h[j]);
    }
    for (int n : {1, 2})
    {
        const auto t = holder_increment_probe(s, h, n);
        CHECK(t.rows[0].value == 0.0);
        CHECK(t.slope == doctest::Approx(2.0 * n).epsilon(5e-3));
        for (std::size_t j = 1; j < h.size(); ++j)
            CHECK(t.rows[j].value == doctest::Approx(std::pow(std::norm(phi(0.3 + h[j]) - phi(0.3)), n)));
    }

    // Free-space increments against the closed-form field.
    const Real z = 0.5;
    EnsembleConfig cfg;
    cfg.probes = {line_probe(0.0, {0.0, 0.05, 0.1, 0.2})};
    cfg.checkpoints = {z};
    const auto res = run_ensemble(cfg, MediumSpec::vacuum(1), desk, beam, fine);
    const std::vector<Real> hh = {0.05, 0.1, 0.2};
    RowMatrixXc two(2, 4);
    two.row(0) = res.samples[0].row(0);
    two.row(1) = res.samples[0].row(0);
    const auto t = holder_increment_probe(two, hh, 1);
    const Complex base = free_space(beam, desk, z, VectorXr::Zero(1));
    for (std::size_t j = 0; j < hh.size(); ++j)
    {
        const Real exact = std::norm(free_space(beam, desk, z, VectorXr::Constant(1, hh[j])) - base);
        CHECK(std::abs(t.rows[j].value - exact) <= 1e-8 * std::max(exact, 1.0));
    }
    CHECK(code_of([&] { holder_increment_probe(two, {0.1}, 1); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("run_ensemble: vacuum, z = 0 and merge contracts")
{
    EnsembleConfig cfg;
    cfg.n_realizations = 1;
    cfg.probes = {line_probe(0.0, {-1.0, 0.0, 1.5}), line_probe(0.3, {0.0, 2.0})};
    cfg.checkpoints = {0.0, 0.25, 0.5};
    const auto vac = run_ensemble(cfg, MediumSpec::vacuum(1), desk, beam, fine);
    REQUIRE(vac.samples.size() == 3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < cfg.probes.size(); ++p)
            for (Index j = 0; j < cfg.probes[p].X.cols(); ++j)
            {
                // grid coordinate eps^-beta r + eta x
                const Real x = cfg.probes[p].r(0) / desk.epsilon + cfg.probes[p].X(0, j);
                const Complex exact = free_space(beam, desk, vac.checkpoints[c], VectorXr::Constant(1, x));
                CHECK(std::abs(vac.samples[c](0, vac.column(p, j)) - exact) < 1e-8);
            }

    const auto medium = MediumSpec::gaussian(1.0, 1.0, 2.0, 1);
    const ScalingRegime mild = custom_regime(0.1, 0.5, 1.0, 1.0);
    const Grid coarse(1, 256, 128.0, 1.0 / 128);
    EnsembleConfig full;
    full.n_realizations = 6;
    full.seed = 99;
    full.probes = {line_probe(0.0, {0.0, 1.0})};
    full.checkpoints = {0.0, 0.5};
    const auto all = run_ensemble(full, medium, mild, beam, coarse);

    // z = 0 samples are the deterministic source at every realization.
    const Field u0 = make_source(beam, mild, coarse);
    const VectorXc s0 = sample_macroscopic(u0, full.probes[0].r, full.probes[0].X);
    for (Index i = 0; i < 6; ++i)
        CHECK((all.samples[0].row(i).transpose() - s0).norm() == 0.0);
    const auto m0 = estimate_moment(all.samples[0], {0}, {0});
    CHECK(m0.value.real() == std::norm(s0(0)));

    EnsembleConfig first = full, second = full;
    first.n_realizations = 2;
    second.n_realizations = 4;
    second.first_realization = 2;
    const auto merged = EnsembleResult::merge(run_ensemble(first, medium, mild, beam, coarse),
                                              run_ensemble(second, medium, mild, beam, coarse));
    REQUIRE(merged.n_realizations() == 6);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(merged.samples[c] == all.samples[c]);
    const auto ea = estimate_moment(all.samples[1], {0}, {1});
    const auto eb = estimate_moment(merged.samples[1], {0}, {1});
    CHECK(ea.value == eb.value);
    CHECK(ea.std_error == eb.std_error);

    std::stringstream archive;
    write_ensemble(archive, merged, "tag-1");
    std::string tag;
    const auto back = read_ensemble(archive, &tag);
    CHECK(tag == "tag-1");
    CHECK(back.first_realization == 0);
    CHECK(back.seed == 99);
    CHECK(back.checkpoints == merged.checkpoints);
    CHECK(back.probes[0].X == merged.probes[0].X);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(back.samples[c] == merged.samples[c]);
    std::stringstream junk("PXFLD1 not an archive");
    CHECK(code_of([&] { read_ensemble(junk); }) == ErrorCode::ParseError);

    EnsembleConfig threaded = full;
    threaded.threads = 3;
    CHECK(run_ensemble(threaded, medium, mild, beam, coarse).samples[1] == all.samples[1]);
    EnsembleConfig paraxial = full;
    paraxial.solver = SolverKind::Paraxial;
    paraxial.n_realizations = 2;
    const auto px1 = run_ensemble(paraxial, medium, mild, beam, coarse);
    paraxial.threads = 2;
    CHECK(run_ensemble(paraxial, medium, mild, beam, coarse).samples[1] == px1.samples[1]);

    CHECK(code_of([&] { EnsembleResult::merge(run_ensemble(second, medium, mild, beam, coarse), all); }) ==
          ErrorCode::InvalidParameter);
    EnsembleConfig empty = full;
    empty.probes.clear();
    CHECK(code_of([&] { run_ensemble(empty, medium, mild, beam, coarse); }) == ErrorCode::InvalidParameter);
    EnsembleConfig none = full;
    none.n_realizations = 0;
    CHECK(code_of([&] { run_ensemble(none, medium, mild, beam, coarse); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("thread count resolution")
{
    CHECK(resolve_threads(4) == 4);
    ::setenv("PXSPK_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    ::setenv("PXSPK_THREADS", "junk", 1);
    CHECK(resolve_threads(0) == 1);
    ::unsetenv("PXSPK_THREADS");
    CHECK(resolve_threads(0) == 1);
    CHECK(solver_kind_from_string(to_string(SolverKind::Paraxial)) == SolverKind::Paraxial);
    CHECK(code_of([] { solver_kind_from_string("euler"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("Gaussian vector sampler reproduces the Wick prediction")
{
    CovarianceModel model;
    model.gamma.resize(2, 2);
    model.gamma << Complex(1.0, 0.0), Complex(0.4, 0.3), Complex(0.4, -0.3), Complex(0.8, 0.0);
    model.mean = VectorXc::Zero(2);
    const RowMatrixXc s = sample_gaussian_vectors(model, 1000000, synthetic(71));
    for (auto [P, Q] : {std::pair{std::vector<Index>{0}, std::vector<Index>{1}},
                        {std::vector<Index>{0, 1}, std::vector<Index>{0, 1}},
                        {std::vector<Index>{0, 0}, std::vector<Index>{1, 1}},
                        {std::vector<Index>{0, 0}, std::vector<Index>{}}})
    {
        const auto e = estimate_moment(s, P, Q);
        CHECK(std::abs(e.value - wick_predict(model, P, Q)) <= 3.0 * e.std_error + 1e-12);
    }
    const auto m = estimate_moment(s, {0, 1}, {0, 1});
    CHECK(std::abs(m.value - wick_predict(model, 2, 2)) <= 3.0 * m.std_error);
    // Gamma_00 Gamma_11 + |Gamma_01|^2
    CHECK(wick_predict(model, 2, 2).real() == doctest::Approx(1.05).epsilon(1e-14));
    CHECK(wick_predict(model, {0, 0}, {0, 0}).real() == doctest::Approx(2.0).epsilon(1e-14));

    CovarianceModel bad = model;
    bad.gamma(1, 1) = -1.0;
    CHECK(code_of([&] { sample_gaussian_vectors(bad, 10, synthetic(1)); }) == ErrorCode::InvalidParameter);
}

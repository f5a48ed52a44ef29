#include "pxspk/propagate.hpp"

#include "pxspk/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace pxspk
{

SourceSpec SourceSpec::gaussian(Real width, Complex amplitude)
{
    require(width > 0.0 && std::isfinite(width), ErrorCode::InvalidParameter, "source width must be positive");
    SourceSpec s;
    s.profile = Profile::Gaussian;
    s.width = width;
    s.amplitude = amplitude;
    return s;
}

SourceSpec SourceSpec::from_function(std::function<Complex(const VectorXr&)> u0, Real support_width)
{
    require(bool(u0), ErrorCode::InvalidParameter, "custom source needs a profile function");
    require(support_width > 0.0, ErrorCode::InvalidParameter, "support width must be positive");
    SourceSpec s;
    s.profile = Profile::Custom;
    s.width = support_width;
    s.custom = std::move(u0);
    return s;
}

Complex SourceSpec::profile_at(const VectorXr& r) const
{
    if (profile == Profile::Custom)
        return custom(r);
    return amplitude * std::exp(-0.5 * r.squaredNorm() / (width * width));
}

Field make_source(const SourceSpec& source, const ScalingRegime& regime, const Grid& grid)
{
    require(regime.epsilon > 0.0, ErrorCode::InvalidParameter, "epsilon must be positive");
    const Real scale = std::pow(regime.epsilon, regime.beta);
    const Real diameter = 2.0 * source.width / scale;
    require(grid.length >= 4.0 * diameter, ErrorCode::DomainTooSmall,
            "periodic domain must be at least 4x the physical source diameter");
    Field f;
    f.grid = grid;
    f.regime = regime;
    f.z = 0.0;
    f.values.resize(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
        f.values(i) = source.profile_at(VectorXr(scale * grid.position(i)));
    return f;
}

namespace
{

VectorXc diffraction_multiplier(const Grid& grid, const ScalingRegime& regime, Real dz, bool normalized)
{
    const VectorXr k2 = grid.wavenumber_squared();
    const Real a = regime.eta / regime.epsilon * dz;
    const Real scale = normalized ? 1.0 / Real(grid.size()) : 1.0;
    VectorXc m(k2.size());
    for (Index i = 0; i < k2.size(); ++i)
        m(i) = std::polar(scale, -a * k2(i));
    return m;
}

/// (-1)^(sum of per-axis indices): shifts the DFT origin to node n/2.
VectorXr centering_sign(const Grid& grid)
{
    VectorXr s(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
    {
        const auto idx = grid.unflatten(i);
        const Index sum = grid.d == 1 ? idx[0] : idx[0] + idx[1];
        s(i) = (sum % 2 == 0) ? 1.0 : -1.0;
    }
    return s;
}

} // namespace

Field diffraction_step(Field f, Real dz)
{
    if (dz == 0.0)
        return f;
    const Fft fft(f.grid.dims());
    fft.forward(f.values);
    f.values.array() *= diffraction_multiplier(f.grid, f.regime, dz, true).array();
    fft.inverse(f.values);
    f.z += dz;
    return f;
}

Field phase_screen_step(Field f, const PhaseScreen& screen)
{
    require(screen.values.size() == f.values.size(), ErrorCode::GridMismatch,
            "phase screen and field grids differ");
    for (Index i = 0; i < f.values.size(); ++i)
        f.values(i) *= std::polar(1.0, screen.values(i));
    return f;
}

Complex free_space(const SourceSpec& source, const ScalingRegime& regime, Real z, const VectorXr& x)
{
    require(source.profile == SourceSpec::Profile::Gaussian, ErrorCode::UnsupportedProfile,
            "closed-form free-space solution needs a Gaussian source");
    const Real s = source.width * std::pow(regime.epsilon, -regime.beta);
    const Real a = regime.eta / regime.epsilon;
    const Complex q = s * s + Complex(0.0, 2.0 * a * z);
    const Complex prefactor = std::pow(q / (s * s), -0.5 * Real(x.size()));
    return source.amplitude * prefactor * std::exp(-0.5 * x.squaredNorm() / q);
}

VectorXc free_space_field(const SourceSpec& source, const ScalingRegime& regime, Real z, const Grid& grid)
{
    VectorXc v(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
        v(i) = free_space(source, regime, z, grid.position(i));
    return v;
}

VectorXc field_spectrum(const Field& f)
{
    VectorXc s = f.values;
    Fft(f.grid.dims()).forward(s);
    s.array() *= centering_sign(f.grid).array() * f.grid.cell_volume();
    return s;
}

VectorXc phase_compensate(const Field& f)
{
    VectorXc s = field_spectrum(f);
    s.array() *= diffraction_multiplier(f.grid, f.regime, -f.z, false).array();
    return s;
}

VectorXc interpolate_periodic(const Field& f, const MatrixXr& points)
{
    const Grid& g = f.grid;
    require(points.rows() == g.d, ErrorCode::GridMismatch, "point dimension differs from grid dimension");
    VectorXc c = f.values;
    Fft(g.dims()).forward(c);
    c /= Real(g.size());
    const Real x0 = -0.5 * g.length;
    const Index n = g.n;
    VectorXc out(points.cols());

    // Per-axis phase tables e^{i xi_m (p - x0)}; the Nyquist mode enters as a cosine.
    auto axis_table = [&](Real p) {
        VectorXc t(n);
        const Real u = p - x0;
        for (Index m = 0; m < n; ++m)
        {
            const Index j = signed_frequency(m, n);
            const Real xi = kTwoPi * Real(j) / g.length;
            t(m) = (j == -n / 2) ? Complex(std::cos(xi * u), 0.0) : std::polar(1.0, xi * u);
        }
        return t;
    };

    for (Index p = 0; p < points.cols(); ++p)
    {
        if (g.d == 1)
        {
            out(p) = (c.array() * axis_table(points(0, p)).array()).sum();
        }
        else
        {
            const VectorXc t0 = axis_table(points(0, p));
            const VectorXc t1 = axis_table(points(1, p));
            Complex acc = 0.0;
            for (Index a = 0; a < n; ++a)
            {
                Complex row = 0.0;
                for (Index b = 0; b < n; ++b)
                    row += c(a * n + b) * t1(b);
                acc += row * t0(a);
            }
            out(p) = acc;
        }
    }
    return out;
}

VectorXc sample_macroscopic(const Field& f, const VectorXr& r, const MatrixXr& X, Real margin)
{
    const Grid& g = f.grid;
    require(r.size() == g.d && X.rows() == g.d, ErrorCode::GridMismatch,
            "centre and offsets must match the grid dimension");
    const Real scale = std::pow(f.regime.epsilon, -f.regime.beta);
    MatrixXr pts(g.d, X.cols());
    const Real lo = -0.5 * g.length + margin;
    const Real hi = 0.5 * g.length - g.dx() - margin;
    for (Index j = 0; j < X.cols(); ++j)
    {
        pts.col(j) = scale * r + f.regime.eta * X.col(j);
        for (int a = 0; a < g.d; ++a)
            require(pts(a, j) >= lo && pts(a, j) <= hi, ErrorCode::PointOutsideDomain,
                    "macroscopic point maps outside the domain margin");
    }
    return interpolate_periodic(f, pts);
}

Real wraparound_mass(const Field& f, Real band)
{
    const Grid& g = f.grid;
    const Real edge = 0.5 * g.length * (1.0 - 2.0 * band);
    Real outer = 0.0;
    const Real total = f.values.squaredNorm();
    for (Index i = 0; i < g.size(); ++i)
    {
        const VectorXr x = g.position(i);
        if (x.cwiseAbs().maxCoeff() > edge)
            outer += std::norm(f.values(i));
    }
    return total > 0.0 ? outer / total : 0.0;
}

Real ito_step_bound(const ScalingRegime& regime, const Grid& grid)
{
    const Real km = grid.max_wavenumber();
    return 0.25 * kPi * regime.epsilon / (regime.eta * km * km * grid.d);
}

Real paraxial_step_bound(const MediumSpec& spec, const ScalingRegime& regime)
{
    return spec.ell_z() * regime.epsilon * regime.theta / (4.0 * regime.eta);
}

Index paraxial_block_slabs(const MediumSpec& spec, Real slab_spacing)
{
    Index n = 8;
    while (Real(n) * slab_spacing < 16.0 * spec.ell_z())
        n *= 2;
    return n;
}

namespace
{

Index step_count(Real z_final, Real dz, const char* what)
{
    const Real m = z_final / dz;
    const Real rounded = std::round(m);
    require(rounded >= 0.0 && std::abs(m - rounded) <= 1e-9 * std::max(1.0, m), ErrorCode::InvalidParameter,
            std::string(what) + " must be a multiple of dz");
    return Index(rounded);
}

/// Drift operator with cached multipliers and a shared scratch buffer.
class Drift
{
public:
    Drift(const Grid& grid, const ScalingRegime& regime)
        : fft_(grid.dims()), full_(diffraction_multiplier(grid, regime, grid.dz, true)),
          half_(diffraction_multiplier(grid, regime, 0.5 * grid.dz, true))
    {
    }

    void full(VectorXc& u) const { apply(u, full_); }
    void half(VectorXc& u) const { apply(u, half_); }

private:
    void apply(VectorXc& u, const VectorXc& m) const
    {
        fft_.forward(u);
        u.array() *= m.array();
        fft_.inverse(u);
    }

    Fft fft_;
    VectorXc full_;
    VectorXc half_;
};

void kick(VectorXc& u, const VectorXr& phase)
{
    for (Index i = 0; i < u.size(); ++i)
        u(i) *= std::polar(1.0, phase(i));
}

/// Common split-step driver; `screen(j)` returns the phase applied in step j.
template <class ScreenFn>
Propagation run_split_step(const Field& u0, Real z_final, const PropagationOptions& opts, ScreenFn&& screen)
{
    const Grid& g = u0.grid;
    const Index m = step_count(z_final, g.dz, "z_final");
    std::vector<Index> marks;
    for (Real z : opts.checkpoints)
    {
        const Index k = step_count(z, g.dz, "checkpoint");
        require(k >= 1 && k <= m, ErrorCode::InvalidParameter, "checkpoint outside (0, z_final]");
        marks.push_back(k);
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    const Drift drift(g, u0.regime);
    Propagation out;
    out.field = u0;
    VectorXc& u = out.field.values;
    const Real norm0 = u0.l2_norm();
    auto record = [&](Index step) {
        out.field.z = u0.z + Real(step) * g.dz;
        const Real drift_now = norm0 > 0.0 ? std::abs(out.field.l2_norm() / norm0 - 1.0) : 0.0;
        out.max_norm_drift = std::max(out.max_norm_drift, drift_now);
        if (std::binary_search(marks.begin(), marks.end(), step))
        {
            if (opts.observer)
                opts.observer(out.field);
            if (opts.keep_snapshots)
                out.snapshots.push_back(out.field);
        }
    };

    if (m == 0)
        return out;
    if (opts.splitting == Splitting::Lie)
    {
        for (Index j = 0; j < m; ++j)
        {
            drift.full(u);
            kick(u, screen(j));
            if (j + 1 == m || std::binary_search(marks.begin(), marks.end(), j + 1))
                record(j + 1);
        }
        return out;
    }
    // Strang with merged half drifts: D/2 S D S ... S D/2.
    drift.half(u);
    for (Index j = 0; j < m; ++j)
    {
        kick(u, screen(j));
        const bool last = j + 1 == m;
        if (last || std::binary_search(marks.begin(), marks.end(), j + 1))
        {
            drift.half(u);
            record(j + 1);
            if (!last)
                drift.half(u);
        }
        else
        {
            drift.full(u);
        }
    }
    return out;
}

void check_solver_input(const Field& u0, const MediumSpec& spec, const ScalingRegime& regime)
{
    require(u0.grid.d == spec.d(), ErrorCode::GridMismatch, "field and medium dimensions differ");
    require(u0.values.size() == u0.grid.size(), ErrorCode::GridMismatch, "field size differs from its grid");
    require(regime.epsilon > 0.0 && regime.eta > 0.0 && regime.theta > 0.0, ErrorCode::InvalidParameter,
            "regime parameters must be positive");
}

} // namespace

Propagation propagate_ito(const Field& u0, const MediumSpec& spec, const ScalingRegime& regime, Real z_final,
                          const SeedPath& seed_path, const PropagationOptions& opts)
{
    check_solver_input(u0, spec, regime);
    Field start = u0;
    start.regime = regime;
    const Grid& g = start.grid;
    if (!spec.is_vacuum())
        require(g.dz <= ito_step_bound(regime, g) * (1.0 + 1e-12), ErrorCode::StepTooCoarse,
                "Ito step exceeds the diffraction-phase budget (eta/eps) dz xi_max^2 <= pi/4");
    const ScreenSynthesizer synth(spec, g, g.dz, regime.eta);
    const SeedPath base = seed_path.with_purpose(StreamPurpose::BrownianScreen);
    std::pair<PhaseScreen, PhaseScreen> pair;
    return run_split_step(start, z_final, opts, [&](Index j) -> const VectorXr& {
        const auto b = std::uint32_t(j);
        if ((b & 1u) == 0u)
            pair = synth.generate_pair(base.with_block(b));
        return (b & 1u) ? pair.second.values : pair.first.values;
    });
}

Propagation propagate_paraxial(const Field& u0, const MediumSpec& spec, const ScalingRegime& regime,
                               Real z_final, const SeedPath& seed_path, const PropagationOptions& opts)
{
    check_solver_input(u0, spec, regime);
    Field start = u0;
    start.regime = regime;
    const Grid& g = start.grid;
    if (!spec.is_vacuum())
        require(g.dz <= paraxial_step_bound(spec, regime) * (1.0 + 1e-12), ErrorCode::StepTooCoarse,
                "paraxial step must resolve the mapped correlation length: dz <= ell_z eps theta / (4 eta)");

    if (spec.is_vacuum())
    {
        const VectorXr none = VectorXr::Zero(g.size());
        return run_split_step(start, z_final, opts, [&](Index) -> const VectorXr& { return none; });
    }

    // One slab per solver step; step j integrates the linear interpolant between slabs j and j+1.
    const Real h = medium_coordinate(regime, g.dz);
    const Index ns = paraxial_block_slabs(spec, h);
    const BlockSynthesizer synth(spec, g, Real(ns) * h, ns);
    const SeedPath base = seed_path.with_purpose(StreamPurpose::MediumBlock);
    const Real scale = std::sqrt(regime.epsilon * regime.theta) * std::pow(regime.eta, -1.5) * h;

    std::pair<FieldBlock, FieldBlock> pair;
    std::int64_t pair_index = -1;
    auto slab = [&](Index s) -> VectorXr {
        const Index b = s / ns;
        const Index p = b >> 1;
        if (p != pair_index)
        {
            const Real t0 = Real(2 * p * ns) * h;
            pair = synth.generate_pair(base.with_block(std::uint32_t(2 * p)), t0, t0 + Real(ns) * h);
            pair_index = p;
        }
        const FieldBlock& blk = (b & 1) ? pair.second : pair.first;
        return blk.samples.row(s % ns).transpose();
    };
    VectorXr prev, phase;
    return run_split_step(start, z_final, opts, [&](Index j) -> const VectorXr& {
        if (j == 0)
            prev = slab(0);
        VectorXr next = slab(j + 1);
        phase = 0.5 * scale * (prev + next);
        prev = std::move(next);
        return phase;
    });
}

// ---------------------------------------------------------------------------

namespace
{
constexpr char kFieldMagic[6] = {'P', 'X', 'F', 'L', 'D', '1'};
constexpr std::uint32_t kFieldVersion = 1;
} // namespace

void write_snapshot(std::ostream& os, const Field& f)
{
    os.write(kFieldMagic, 6);
    io::write_u32(os, kFieldVersion);
    io::write_u32(os, std::uint32_t(f.grid.d));
    io::write_u32(os, std::uint32_t(f.grid.n));
    io::write_f64(os, f.grid.length);
    io::write_f64(os, f.grid.dz);
    io::write_f64(os, f.z);
    io::write_f64(os, f.regime.theta);
    io::write_f64(os, f.regime.epsilon);
    io::write_f64(os, f.regime.eta);
    io::write_f64(os, f.regime.beta);
    io::write_f64(os, f.regime.gamma);
    io::write_u32(os, std::uint32_t(f.regime.kind));
    for (Index i = 0; i < f.values.size(); ++i)
    {
        io::write_f64(os, f.values(i).real());
        io::write_f64(os, f.values(i).imag());
    }
    require(bool(os), ErrorCode::IoError, "failed writing field snapshot");
}

Field read_snapshot(std::istream& is)
{
    char magic[6];
    is.read(magic, 6);
    require(is && std::equal(magic, magic + 6, kFieldMagic), ErrorCode::ParseError, "not a PXFLD1 snapshot");
    require(io::read_u32(is) == kFieldVersion, ErrorCode::ParseError, "unsupported snapshot version");
    const int d = int(io::read_u32(is));
    const int n = int(io::read_u32(is));
    const Real length = io::read_f64(is);
    const Real dz = io::read_f64(is);
    Field f;
    f.z = io::read_f64(is);
    f.regime.theta = io::read_f64(is);
    f.regime.epsilon = io::read_f64(is);
    f.regime.eta = io::read_f64(is);
    f.regime.beta = io::read_f64(is);
    f.regime.gamma = io::read_f64(is);
    f.regime.kind = RegimeKind(io::read_u32(is));
    require(bool(is), ErrorCode::ParseError, "truncated snapshot header");
    f.grid = Grid(d, n, length, dz);
    f.values.resize(f.grid.size());
    for (Index i = 0; i < f.values.size(); ++i)
    {
        const Real re = io::read_f64(is);
        const Real im = io::read_f64(is);
        f.values(i) = {re, im};
    }
    require(bool(is), ErrorCode::ParseError, "truncated snapshot samples");
    return f;
}

} // namespace pxspk

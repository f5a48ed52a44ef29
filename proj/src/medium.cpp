#include "pxspk/medium.hpp"

#include "pxspk/binary_io.hpp"
#include "pxspk/scaling.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace pxspk
{

std::string_view to_string(MediumFamily family)
{
    switch (family)
    {
    case MediumFamily::GaussianGaussian:
        return "GaussianGaussian";
    }
    return "unknown";
}

MediumSpec MediumSpec::gaussian(Real sigma_c, Real ell_z, Real ell_x, int d)
{
    require(sigma_c > 0.0 && std::isfinite(sigma_c), ErrorCode::InvalidParameter,
            "sigma_c must be positive");
    require(ell_z > 0.0 && std::isfinite(ell_z), ErrorCode::InvalidParameter, "ell_z must be positive");
    require(ell_x > 0.0 && std::isfinite(ell_x), ErrorCode::InvalidParameter, "ell_x must be positive");
    require(d == 1 || d == 2, ErrorCode::InvalidParameter, "transverse dimension must be 1 or 2");
    return MediumSpec(MediumFamily::GaussianGaussian, sigma_c, ell_z, ell_x, d);
}

MediumSpec MediumSpec::vacuum(int d, Real ell_z, Real ell_x)
{
    require(ell_z > 0.0 && ell_x > 0.0, ErrorCode::InvalidParameter, "correlation lengths must be positive");
    require(d == 1 || d == 2, ErrorCode::InvalidParameter, "transverse dimension must be 1 or 2");
    return MediumSpec(MediumFamily::GaussianGaussian, 0.0, ell_z, ell_x, d);
}

MatrixXr hessian_Xi(const MediumSpec& spec)
{
    const Real lx = spec.ell_x();
    return MatrixXr::Identity(spec.d(), spec.d()) * (-spec.R0() / (lx * lx));
}

QuadratureResult spectral_moment(const MediumSpec& spec, Real n_k, Real n_s, const QuadratureOptions& opts)
{
    require(n_k >= 0.0 && n_s >= 0.0, ErrorCode::InvalidParameter, "moment orders must be nonnegative");
    const Real lz = spec.ell_z(), lx = spec.ell_x();
    const Real s2 = spec.sigma_c() * spec.sigma_c();
    // The family is separable: an s-integral times a radial k-integral.
    auto japanese = [](Real a) { return std::sqrt(1.0 + a * a); };
    auto fs = [&](Real s) { return std::pow(japanese(s), n_s) * std::exp(-0.5 * s * s / (lz * lz)); };
    const Real knorm = std::pow(std::sqrt(kTwoPi) * lx, spec.d());
    auto fk = [&](Real k) {
        const Real radial = spec.d() == 1 ? 2.0 : kTwoPi * k;
        return radial * std::pow(japanese(k), n_k) * knorm * std::exp(-0.5 * k * k * lx * lx);
    };
    // A coarse pass sizes the factors; each factor's tolerance is then scaled
    // by the other factor so that the product meets the requested tolerance.
    QuadratureOptions coarse = opts;
    coarse.abs_tol = 1e-6;
    coarse.rel_tol = 1e-6;
    const Real s_mag = s2 * integrate(fs, -kInf, kInf, coarse).value;
    const Real k_mag = integrate(fk, 0.0, kInf, coarse).value;
    QuadratureOptions os = opts, ok = opts;
    os.abs_tol = 0.25 * opts.abs_tol / std::max(s2 * k_mag, 1e-300);
    ok.abs_tol = 0.25 * opts.abs_tol / std::max(s_mag, 1e-300);
    os.rel_tol = ok.rel_tol = 0.25 * opts.rel_tol;
    const auto is = integrate(fs, -kInf, kInf, os);
    const auto ik = integrate(fk, 0.0, kInf, ok);
    QuadratureResult r;
    r.value = s2 * is.value * ik.value;
    r.error = s2 * (std::abs(is.value) * ik.error + std::abs(ik.value) * is.error + is.error * ik.error);
    r.evaluations = is.evaluations + ik.evaluations;
    require(r.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(r.value)),
            ErrorCode::QuadratureNotConverged, "spectral moment did not reach tolerance");
    return r;
}

void check_screen_resolution(const MediumSpec& spec, const Grid& grid)
{
    require(grid.d == spec.d(), ErrorCode::GridMismatch, "grid and medium dimensions differ");
    require(grid.length >= 8.0 * spec.ell_x(), ErrorCode::GridTooCoarse,
            "transverse domain must span at least 8 correlation lengths");
    require(grid.dx() <= spec.ell_x(), ErrorCode::GridTooCoarse,
            "transverse spacing must not exceed the correlation length");
}

void check_block_resolution(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs)
{
    check_screen_resolution(spec, grid);
    require(n_slabs >= 2 && z_extent > 0.0, ErrorCode::GridTooCoarse, "block needs at least two slabs");
    const Real h = z_extent / Real(n_slabs);
    require(h <= 0.25 * spec.ell_z() * (1.0 + 1e-12), ErrorCode::GridTooCoarse,
            "slab spacing must not exceed ell_z / 4");
    require(z_extent >= 8.0 * spec.ell_z() * (1.0 - 1e-12), ErrorCode::GridTooCoarse,
            "block must span at least 8 longitudinal correlation lengths");
}

// ---------------------------------------------------------------------------

BlockSynthesizer::BlockSynthesizer(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs)
    : spec_(spec), grid_(grid), z_extent_(z_extent), n_slabs_(n_slabs)
{
    check_block_resolution(spec, grid, z_extent, n_slabs);
    const Index nx = grid.size();
    amplitude_.resize(n_slabs * nx);
    const Real volume = z_extent * std::pow(grid.length, grid.d);
    const Real lz = spec.ell_z();
    for (Index j = 0; j < n_slabs; ++j)
    {
        const Real omega = kTwoPi * Real(signed_frequency(j, n_slabs)) / z_extent;
        // Full (z, x) spectrum of the separable Gaussian covariance.
        const Real sz = std::sqrt(kTwoPi) * lz * std::exp(-0.5 * omega * omega * lz * lz);
        for (Index f = 0; f < nx; ++f)
        {
            const Real sk = spec.is_vacuum()
                                ? 0.0
                                : spec.sigma_c() * spec.sigma_c() *
                                      std::pow(std::sqrt(kTwoPi) * spec.ell_x(), spec.d()) *
                                      std::exp(-0.5 * grid.wavevector(f).squaredNorm() * spec.ell_x() *
                                               spec.ell_x());
            amplitude_(j * nx + f) = std::sqrt(2.0 * sz * sk / volume);
        }
    }
    if (!spec.is_vacuum())
    {
        std::vector<int> dims{int(n_slabs)};
        for (int a = 0; a < grid.d; ++a)
            dims.push_back(grid.n);
        fft_.emplace(std::move(dims));
    }
}

RowMatrixXc BlockSynthesizer::synthesize(const SeedPath& pair_path) const
{
    RowMatrixXc c(n_slabs_, grid_.size());
    CounterStream rng(pair_path.with_purpose(StreamPurpose::MediumBlock));
    Complex* data = c.data();
    for (Index i = 0; i < c.size(); ++i)
        data[i] = amplitude_(i) * rng.complex_normal();
    fft_->inverse(data);
    return c;
}

FieldBlock BlockSynthesizer::generate(const SeedPath& path, Real t_origin) const
{
    FieldBlock block;
    block.z_extent = z_extent_;
    block.t_origin = t_origin;
    block.grid = grid_;
    block.seed_path = path;
    if (spec_.is_vacuum())
    {
        block.samples = RowMatrixXr::Zero(n_slabs_, grid_.size());
        return block;
    }
    SeedPath pair = path;
    pair.block = path.block >> 1;
    RowMatrixXc c = synthesize(pair);
    block.samples = (path.block & 1u) ? RowMatrixXr(c.imag()) : RowMatrixXr(c.real());
    return block;
}

std::pair<FieldBlock, FieldBlock> BlockSynthesizer::generate_pair(const SeedPath& path, Real t_origin_first,
                                                                  Real t_origin_second) const
{
    FieldBlock first, second;
    first.z_extent = second.z_extent = z_extent_;
    first.grid = second.grid = grid_;
    first.t_origin = t_origin_first;
    second.t_origin = t_origin_second;
    first.seed_path = path.with_block(path.block & ~1u);
    second.seed_path = path.with_block(path.block | 1u);
    if (spec_.is_vacuum())
    {
        first.samples = second.samples = RowMatrixXr::Zero(n_slabs_, grid_.size());
        return {std::move(first), std::move(second)};
    }
    SeedPath pair = path;
    pair.block = path.block >> 1;
    RowMatrixXc c = synthesize(pair);
    first.samples = c.real();
    second.samples = c.imag();
    return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------

ScreenSynthesizer::ScreenSynthesizer(const MediumSpec& spec, const Grid& grid, Real delta_z, Real eta)
    : grid_(grid), delta_z_(delta_z), vacuum_(spec.is_vacuum()), fft_(grid.dims())
{
    require(delta_z > 0.0, ErrorCode::InvalidParameter, "screen step must be positive");
    require(eta > 0.0, ErrorCode::InvalidParameter, "eta must be positive");
    check_screen_resolution(spec, grid);
    amplitude_.resize(grid.size());
    const Real area = std::pow(grid.length, grid.d);
    for (Index f = 0; f < grid.size(); ++f)
    {
        const Real s = vacuum_ ? 0.0 : spectrum_Rhat(spec, grid.wavevector(f)) * delta_z / (eta * eta);
        amplitude_(f) = std::sqrt(2.0 * s / area);
    }
}

Real ScreenSynthesizer::point_variance() const { return 0.5 * amplitude_.squaredNorm(); }

VectorXc ScreenSynthesizer::synthesize(const SeedPath& pair_path) const
{
    VectorXc c(grid_.size());
    CounterStream rng(pair_path.with_purpose(StreamPurpose::BrownianScreen));
    for (Index i = 0; i < c.size(); ++i)
        c(i) = amplitude_(i) * rng.complex_normal();
    fft_.inverse(c);
    return c;
}

PhaseScreen ScreenSynthesizer::generate(const SeedPath& path) const
{
    PhaseScreen screen;
    screen.delta_z = delta_z_;
    screen.kind = ScreenKind::ItoBrownian;
    if (vacuum_)
    {
        screen.values = VectorXr::Zero(grid_.size());
        return screen;
    }
    SeedPath pair = path;
    pair.block = path.block >> 1;
    const VectorXc c = synthesize(pair);
    screen.values = (path.block & 1u) ? VectorXr(c.imag()) : VectorXr(c.real());
    return screen;
}

std::pair<PhaseScreen, PhaseScreen> ScreenSynthesizer::generate_pair(const SeedPath& path) const
{
    PhaseScreen a, b;
    a.delta_z = b.delta_z = delta_z_;
    a.kind = b.kind = ScreenKind::ItoBrownian;
    if (vacuum_)
    {
        a.values = b.values = VectorXr::Zero(grid_.size());
        return {std::move(a), std::move(b)};
    }
    SeedPath pair = path;
    pair.block = path.block >> 1;
    const VectorXc c = synthesize(pair);
    a.values = c.real();
    b.values = c.imag();
    return {std::move(a), std::move(b)};
}

FieldBlock synthesize_block(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs,
                            const SeedPath& seed_path, Real t_origin)
{
    return BlockSynthesizer(spec, grid, z_extent, n_slabs).generate(seed_path, t_origin);
}

PhaseScreen brownian_screen(const MediumSpec& spec, const Grid& grid, Real delta_z, Real eta,
                            const SeedPath& seed_path)
{
    return ScreenSynthesizer(spec, grid, delta_z, eta).generate(seed_path);
}

Real medium_coordinate(const ScalingRegime& regime, Real z)
{
    return regime.eta * z / (regime.epsilon * regime.theta);
}

PhaseScreen integrated_screen(const FieldBlock& block, const ScalingRegime& regime, Real z0, Real dz)
{
    require(regime.theta > 0.0 && regime.epsilon > 0.0 && regime.eta > 0.0, ErrorCode::InvalidParameter,
            "regime parameters must be positive");
    require(dz >= 0.0, ErrorCode::InvalidParameter, "solver step must be nonnegative");
    const Real h = block.slab_spacing();
    const Index ns = block.n_slabs();
    const Real ta = medium_coordinate(regime, z0) - block.t_origin;
    const Real tb = medium_coordinate(regime, z0 + dz) - block.t_origin;
    const Real t_last = Real(ns - 1) * h;
    const Real slack = 1e-9 * std::max(h, std::abs(tb));
    require(ta >= -slack && tb <= t_last + slack, ErrorCode::StepOutsideBlock,
            "solver step maps outside the medium block");

    // Exact integral of the linear interpolant over [ta, tb].
    VectorXr acc = VectorXr::Zero(block.samples.cols());
    auto value_at = [&](Real t, Index j) {
        const Real w = std::clamp((t - Real(j) * h) / h, 0.0, 1.0);
        const Index j1 = std::min(j + 1, ns - 1);
        return VectorXr((1.0 - w) * block.samples.row(j).transpose() + w * block.samples.row(j1).transpose());
    };
    Real t = std::clamp(ta, 0.0, t_last);
    const Real t_end = std::clamp(tb, 0.0, t_last);
    while (t < t_end)
    {
        const Index j = std::min(Index(std::floor(t / h)), ns - 2);
        const Real seg_end = std::min(t_end, Real(j + 1) * h);
        if (seg_end > t)
            acc += 0.5 * (seg_end - t) * (value_at(t, j) + value_at(seg_end, j));
        if (seg_end <= t)
            break;
        t = seg_end;
    }
    PhaseScreen screen;
    const Real scale = std::sqrt(regime.epsilon * regime.theta) * std::pow(regime.eta, -1.5);
    screen.values = scale * acc;
    screen.delta_z = dz;
    screen.kind = ScreenKind::ParaxialIntegrated;
    return screen;
}

// ---------------------------------------------------------------------------

namespace
{
constexpr char kBlockMagic[6] = {'P', 'X', 'S', 'P', 'K', '1'};
constexpr std::uint32_t kBlockVersion = 1;
} // namespace

void write_block(std::ostream& os, const FieldBlock& block)
{
    os.write(kBlockMagic, 6);
    io::write_u32(os, kBlockVersion);
    io::write_u32(os, std::uint32_t(block.grid.d));
    io::write_u32(os, std::uint32_t(block.n_slabs()));
    io::write_u32(os, std::uint32_t(block.grid.n));
    io::write_f64(os, block.slab_spacing());
    io::write_f64(os, block.grid.dx());
    io::write_f64(os, block.grid.dz);
    io::write_f64(os, block.t_origin);
    io::write_u64(os, block.seed_path.seed);
    io::write_u32(os, block.seed_path.realization);
    io::write_u32(os, block.seed_path.block);
    io::write_u32(os, std::uint32_t(block.seed_path.purpose));
    for (Index i = 0; i < block.samples.size(); ++i)
        io::write_f64(os, block.samples.data()[i]);
    require(bool(os), ErrorCode::IoError, "failed writing medium block");
}

FieldBlock read_block(std::istream& is)
{
    char magic[6];
    is.read(magic, 6);
    require(is && std::equal(magic, magic + 6, kBlockMagic), ErrorCode::ParseError, "not a PXSPK1 block file");
    require(io::read_u32(is) == kBlockVersion, ErrorCode::ParseError, "unsupported block file version");
    const int d = int(io::read_u32(is));
    const Index ns = io::read_u32(is);
    const int n = int(io::read_u32(is));
    const Real h = io::read_f64(is);
    const Real dx = io::read_f64(is);
    const Real dz = io::read_f64(is);
    FieldBlock block;
    block.t_origin = io::read_f64(is);
    block.seed_path.seed = io::read_u64(is);
    block.seed_path.realization = io::read_u32(is);
    block.seed_path.block = io::read_u32(is);
    block.seed_path.purpose = StreamPurpose(io::read_u32(is));
    require(bool(is), ErrorCode::ParseError, "truncated block header");
    block.grid = Grid(d, n, dx * n, dz);
    block.z_extent = h * Real(ns);
    block.samples.resize(ns, block.grid.size());
    for (Index i = 0; i < block.samples.size(); ++i)
        block.samples.data()[i] = io::read_f64(is);
    require(bool(is), ErrorCode::ParseError, "truncated block samples");
    return block;
}

} // namespace pxspk

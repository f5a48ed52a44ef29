#pragma once

#include "pxspk/fft.hpp"
#include "pxspk/grid.hpp"
#include "pxspk/quadrature.hpp"
#include "pxspk/rng.hpp"
#include "pxspk/types.hpp"

#include <cmath>
#include <iosfwd>
#include <optional>
#include <string>

namespace pxspk
{

struct ScalingRegime;

enum class MediumFamily
{
    /// C(s, x) = sigma_c^2 exp(-s^2 / (2 ell_z^2)) exp(-|x|^2 / (2 ell_x^2))
    GaussianGaussian,
};

std::string_view to_string(MediumFamily family);

/// Stationary mean-zero Gaussian medium, described by its (z, x) covariance.
/// Instances built through gaussian() always satisfy sigma_c, ell_z, ell_x > 0;
/// vacuum() is the homogeneous medium (sigma_c = 0) used for free-space runs.
class MediumSpec
{
public:
    static MediumSpec gaussian(Real sigma_c, Real ell_z, Real ell_x, int d);
    static MediumSpec vacuum(int d, Real ell_z = 1.0, Real ell_x = 1.0);

    MediumFamily family() const { return family_; }
    Real sigma_c() const { return sigma_c_; }
    Real ell_z() const { return ell_z_; }
    Real ell_x() const { return ell_x_; }
    int d() const { return d_; }
    bool is_vacuum() const { return sigma_c_ == 0.0; }

    /// R(0) = integral over z of C(z, 0).
    Real R0() const { return sigma_c_ * sigma_c_ * std::sqrt(kTwoPi) * ell_z_; }

private:
    MediumSpec(MediumFamily f, Real s, Real lz, Real lx, int d)
        : family_(f), sigma_c_(s), ell_z_(lz), ell_x_(lx), d_(d)
    {
    }

    MediumFamily family_;
    Real sigma_c_;
    Real ell_z_;
    Real ell_x_;
    int d_;
};

/// C(s, x), the full covariance.
template <class Derived>
Real covariance_C(const MediumSpec& spec, Real s, const Eigen::MatrixBase<Derived>& x)
{
    const Real lz = spec.ell_z(), lx = spec.ell_x();
    return spec.sigma_c() * spec.sigma_c() * std::exp(-0.5 * s * s / (lz * lz)) *
           std::exp(-0.5 * x.squaredNorm() / (lx * lx));
}

/// Lateral covariance R(x) = integral of C(z, x) dz.
template <class Derived>
Real covariance_R(const MediumSpec& spec, const Eigen::MatrixBase<Derived>& x)
{
    const Real lx = spec.ell_x();
    return spec.R0() * std::exp(-0.5 * x.squaredNorm() / (lx * lx));
}
inline Real covariance_R(const MediumSpec& spec, Real x)
{
    return covariance_R(spec, Eigen::Matrix<Real, 1, 1>::Constant(x));
}

/// Power spectrum R^(k) = integral of R(x) e^{-i k.x} dx >= 0.
template <class Derived>
Real spectrum_Rhat(const MediumSpec& spec, const Eigen::MatrixBase<Derived>& k)
{
    const Real lx = spec.ell_x();
    const Real norm = std::pow(std::sqrt(kTwoPi) * lx, spec.d());
    return spec.R0() * norm * std::exp(-0.5 * k.squaredNorm() * lx * lx);
}
inline Real spectrum_Rhat(const MediumSpec& spec, Real k)
{
    return spectrum_Rhat(spec, Eigen::Matrix<Real, 1, 1>::Constant(k));
}

/// C^(s, k): covariance transformed in x only.
inline Real spectrum_Chat(const MediumSpec& spec, Real s, Real k_norm)
{
    const Real lz = spec.ell_z(), lx = spec.ell_x();
    return spec.sigma_c() * spec.sigma_c() * std::exp(-0.5 * s * s / (lz * lz)) *
           std::pow(std::sqrt(kTwoPi) * lx, spec.d()) * std::exp(-0.5 * k_norm * k_norm * lx * lx);
}

/// Xi = Hessian of R at the origin; -R(0)/ell_x^2 times the identity here.
MatrixXr hessian_Xi(const MediumSpec& spec);

/// Integral of <k>^n_k <s>^n_s |C^(s, k)| over R^{d+1}, <a> = sqrt(1 + |a|^2).
/// Non-integer exponents are accepted.
QuadratureResult spectral_moment(const MediumSpec& spec, Real n_k, Real n_s,
                                 const QuadratureOptions& opts = {});

/// One realization of the medium on a periodic (z, x) block. Row j is the slab
/// at medium coordinate t_origin + j * slab_spacing().
struct FieldBlock
{
    RowMatrixXr samples;
    Real z_extent = 0.0;
    Real t_origin = 0.0;
    Grid grid;
    SeedPath seed_path;

    Index n_slabs() const { return samples.rows(); }
    Real slab_spacing() const { return z_extent / Real(samples.rows()); }
};

enum class ScreenKind
{
    ParaxialIntegrated,
    ItoBrownian,
};

/// Transverse phase (radians) applied over one solver step.
struct PhaseScreen
{
    VectorXr values;
    Real delta_z = 0.0;
    ScreenKind kind = ScreenKind::ItoBrownian;
};

/// Spectral synthesis of z-correlated blocks on the (z_extent, L^d) torus.
/// Block indices 2m and 2m+1 are the real and imaginary parts of one complex
/// synthesis, which makes them independent and halves the transform count.
class BlockSynthesizer
{
public:
    BlockSynthesizer(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs);

    FieldBlock generate(const SeedPath& path, Real t_origin = 0.0) const;
    /// Both members of the pair containing block index path.block.
    std::pair<FieldBlock, FieldBlock> generate_pair(const SeedPath& path, Real t_origin_first,
                                                    Real t_origin_second) const;

    Index n_slabs() const { return n_slabs_; }
    Real z_extent() const { return z_extent_; }
    const Grid& grid() const { return grid_; }

private:
    RowMatrixXc synthesize(const SeedPath& pair_path) const;

    MediumSpec spec_;
    Grid grid_;
    Real z_extent_;
    Index n_slabs_;
    VectorXr amplitude_; // flat (slab-frequency, transverse-frequency), DFT order
    std::optional<Fft> fft_;
};

/// Spectral synthesis of white-in-z screens with covariance (delta_z/eta^2) R.
/// Pairing of block indices as in BlockSynthesizer.
class ScreenSynthesizer
{
public:
    ScreenSynthesizer(const MediumSpec& spec, const Grid& grid, Real delta_z, Real eta);

    PhaseScreen generate(const SeedPath& path) const;
    std::pair<PhaseScreen, PhaseScreen> generate_pair(const SeedPath& path) const;

    /// Exact discrete point variance of the synthesized screens.
    Real point_variance() const;

private:
    VectorXc synthesize(const SeedPath& pair_path) const;

    Grid grid_;
    Real delta_z_;
    bool vacuum_;
    VectorXr amplitude_;
    Fft fft_;
};

/// Throws GridTooCoarse unless the periodic block resolves the covariance:
/// L >= 8 ell_x, dx <= ell_x, spacing <= ell_z/4, z_extent >= 8 ell_z.
void check_block_resolution(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs);
void check_screen_resolution(const MediumSpec& spec, const Grid& grid);

FieldBlock synthesize_block(const MediumSpec& spec, const Grid& grid, Real z_extent, Index n_slabs,
                            const SeedPath& seed_path, Real t_origin = 0.0);

PhaseScreen brownian_screen(const MediumSpec& spec, const Grid& grid, Real delta_z, Real eta,
                            const SeedPath& seed_path);

/// Medium coordinate t = eta z / (epsilon theta) of solver depth z.
Real medium_coordinate(const ScalingRegime& regime, Real z);

/// (eps theta)^{1/2} eta^{-3/2} times the integral of nu over the mapped
/// interval of [z0, z0 + dz], using the piecewise-linear interpolant of the
/// slab samples. Throws StepOutsideBlock when the interval leaves the block.
PhaseScreen integrated_screen(const FieldBlock& block, const ScalingRegime& regime, Real z0, Real dz);

/// Binary block cache ("PXSPK1"), little-endian.
void write_block(std::ostream& os, const FieldBlock& block);
FieldBlock read_block(std::istream& is);

} // namespace pxspk

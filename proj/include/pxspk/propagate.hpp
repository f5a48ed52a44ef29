#pragma once

#include "pxspk/fft.hpp"
#include "pxspk/grid.hpp"
#include "pxspk/medium.hpp"
#include "pxspk/rng.hpp"
#include "pxspk/scaling.hpp"
#include "pxspk/types.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace pxspk
{

/// Complex transverse wavefield at depth z.
struct Field
{
    VectorXc values;
    Real z = 0.0;
    Grid grid;
    ScalingRegime regime;

    /// Riemann-sum L2 norm with cell weight dx^d.
    Real l2_norm() const { return std::sqrt(values.squaredNorm() * grid.cell_volume()); }
};

/// Incident beam u0_theta(x) = u0(epsilon^beta x). The Gaussian profile is
/// u0(r) = amplitude * exp(-|r|^2 / (2 width^2)); a Custom profile supplies
/// u0 directly and uses `width` as its support scale.
struct SourceSpec
{
    enum class Profile
    {
        Gaussian,
        Custom,
    };

    Profile profile = Profile::Gaussian;
    Real width = 1.0;
    Complex amplitude = 1.0;
    std::function<Complex(const VectorXr&)> custom;

    static SourceSpec gaussian(Real width, Complex amplitude = 1.0);
    static SourceSpec from_function(std::function<Complex(const VectorXr&)> u0, Real support_width);

    /// u0 at macroscopic coordinate r (before the epsilon^beta rescaling).
    Complex profile_at(const VectorXr& r) const;
};

/// Samples u0(epsilon^beta x) on the grid at z = 0. Throws DomainTooSmall
/// unless the domain is at least 4x the physical source diameter
/// (diameter = 2 width epsilon^-beta).
Field make_source(const SourceSpec& source, const ScalingRegime& regime, const Grid& grid);

/// Multiplies the spectrum by exp(-i (eta/epsilon) |xi|^2 dz).
Field diffraction_step(Field f, Real dz);

/// Pointwise multiplication by exp(i screen).
Field phase_screen_step(Field f, const PhaseScreen& screen);

/// Closed-form solution of dz u = i (eta/epsilon) Lap u for the Gaussian source:
/// u = A (1 + 2 i a z / s^2)^{-d/2} exp(-|x|^2 / (2 (s^2 + 2 i a z))),
/// with a = eta/epsilon and s = width * epsilon^-beta.
Complex free_space(const SourceSpec& source, const ScalingRegime& regime, Real z, const VectorXr& x);

/// free_space sampled on every grid node.
VectorXc free_space_field(const SourceSpec& source, const ScalingRegime& regime, Real z, const Grid& grid);

/// Continuous-transform approximation u^(xi) = dx^d sum_j u(x_j) e^{-i xi.x_j},
/// in DFT order.
VectorXc field_spectrum(const Field& f);

/// Phase-compensated spectrum u^(z, xi) exp(i eta z |xi|^2 / epsilon).
VectorXc phase_compensate(const Field& f);

/// Trigonometric interpolant of the periodic field at arbitrary physical points
/// (one point per column). No domain check.
VectorXc interpolate_periodic(const Field& f, const MatrixXr& points);

/// phi(z, r, x_j) = u(z, epsilon^-beta r + eta x_j) for each column x_j of X.
/// Throws PointOutsideDomain when a mapped point comes within `margin` of the
/// periodic boundary.
VectorXc sample_macroscopic(const Field& f, const VectorXr& r, const MatrixXr& X, Real margin = 0.0);

/// Fraction of |u|^2 inside the outer `band` fraction of the domain along any axis.
Real wraparound_mass(const Field& f, Real band = 1.0 / 16.0);

enum class Splitting
{
    Strang,
    Lie,
};

struct PropagationOptions
{
    Splitting splitting = Splitting::Strang;
    /// Depths (multiples of dz, in (0, z_final]) at which the observer fires
    /// and, if keep_snapshots is set, a copy of the field is kept.
    std::vector<Real> checkpoints;
    std::function<void(const Field&)> observer;
    bool keep_snapshots = false;
};

struct Propagation
{
    Field field;
    std::vector<Field> snapshots;
    /// max |norm(z) / norm(0) - 1| over checkpoints and the final depth.
    Real max_norm_drift = 0.0;
};

/// Ito-Schroedinger solver: du = i (eta/eps) Lap u dz - R(0)/(2 eta^2) u dz + (i/eta) u dB.
/// Each step multiplies by exp(i dB/eta) (a brownian_screen with delta_z = dz),
/// so the damping appears in expectation and every path is unitary.
Propagation propagate_ito(const Field& u0, const MediumSpec& spec, const ScalingRegime& regime, Real z_final,
                          const SeedPath& seed_path, const PropagationOptions& opts = {});

/// Paraxial solver: dz u = i (eta/eps) Lap u + i (eta eps theta)^{-1/2} nu(eta z / (eps theta), x) u,
/// with nu drawn as independent z-correlated blocks and integrated exactly per step.
Propagation propagate_paraxial(const Field& u0, const MediumSpec& spec, const ScalingRegime& regime,
                               Real z_final, const SeedPath& seed_path, const PropagationOptions& opts = {});

/// Largest Ito step keeping (eta/eps) dz xi_max^2 <= pi/4.
Real ito_step_bound(const ScalingRegime& regime, const Grid& grid);
/// Largest paraxial step resolving a quarter of the mapped correlation length.
Real paraxial_step_bound(const MediumSpec& spec, const ScalingRegime& regime);
/// Slabs per medium block used by the paraxial solver.
Index paraxial_block_slabs(const MediumSpec& spec, Real slab_spacing);

/// Field snapshot ("PXFLD1"), little-endian.
void write_snapshot(std::ostream& os, const Field& f);
Field read_snapshot(std::istream& is);

} // namespace pxspk

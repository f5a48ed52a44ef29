#pragma once

#include "pxspk/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pxspk
{

class MediumSpec;

enum class RegimeKind
{
    Kinetic,
    Diffusive,
    Custom,
};

std::string_view to_string(RegimeKind kind);
RegimeKind regime_kind_from_string(std::string_view name);

/// Dimensionless scaling parameters of the high-frequency, long-distance limit.
///   theta   : wavelength over medium correlation length
///   epsilon : medium correlation length over beam width (weak coupling)
///   eta     : propagation-distance order (1 = kinetic, << 1 = diffusive)
///   beta    : source width exponent, u0_theta(x) = u0(epsilon^beta x)
///   gamma   : coupling exponent, theta <= epsilon^gamma
struct ScalingRegime
{
    Real theta = 0.0;
    Real epsilon = 0.0;
    Real eta = 1.0;
    Real beta = 1.0;
    Real gamma = 1.0;
    RegimeKind kind = RegimeKind::Custom;

    /// Coefficient of the Laplacian in dz u = i (eta / epsilon) Lap u + ...
    Real diffraction_coefficient() const { return eta / epsilon; }

    /// First violated invariant, if any.
    std::optional<std::string> violation() const;
};

/// Builds a regime with epsilon = theta^(1/gamma) and eta set by the kind
/// (1 for kinetic, 1 / log|log epsilon| for diffusive). Custom kinds take
/// eta explicitly and default to 1.
ScalingRegime regime_from_theta(Real theta, Real gamma, RegimeKind kind, Real beta,
                                std::optional<Real> eta = std::nullopt);

/// Fully explicit regime; only range checks apply.
ScalingRegime custom_regime(Real theta, Real epsilon, Real eta, Real beta, Real gamma = 1.0);

/// Laser-propagation variables measured in units of the turbulence inner scale.
struct PhysicalScenario
{
    Real k0 = 0.0;    // carrier wavenumber [1/m]
    Real l0 = 0.0;    // inner scale [m]
    Real w0 = 0.0;    // beam width [m]
    Real Z = 0.0;     // propagation distance in units of l0
    Real sigma = 0.0; // RMS refractive-index fluctuation
};

struct DimensionlessParameters
{
    Real theta = 0.0;
    Real epsilon = 0.0;
    Real eta = 0.0;
    /// |sigma^2 Z^3 l0^2 / w0^2 - 1|; zero when the physical model maps exactly
    /// onto the rescaled paraxial equation.
    Real consistency_residual = 0.0;
    /// epsilon < 1/2: the source is wide compared with the medium scale.
    bool wide_beam = false;
};

DimensionlessParameters physical_to_dimensionless(const PhysicalScenario& s);

struct AssumptionCheck
{
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport
{
    std::vector<AssumptionCheck> checks;
    /// theta^alpha * exp(C / eta^2), reported only.
    Real small_parameter_metric = 0.0;

    bool all_passed() const;
    const AssumptionCheck* find(std::string_view name) const;
};

struct ValidationOptions
{
    Real alpha = 1.0;
    Real metric_constant = 1.0;
    int probes = 64;
};

ValidationReport validate_assumptions(const MediumSpec& spec, const ScalingRegime& regime,
                                      const ValidationOptions& opts = {});

} // namespace pxspk

#include "pxspk/scaling.hpp"

#include "pxspk/medium.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace pxspk
{

std::string_view to_string(RegimeKind kind)
{
    switch (kind)
    {
    case RegimeKind::Kinetic:
        return "kinetic";
    case RegimeKind::Diffusive:
        return "diffusive";
    case RegimeKind::Custom:
        return "custom";
    }
    return "unknown";
}

RegimeKind regime_kind_from_string(std::string_view name)
{
    if (name == "kinetic")
        return RegimeKind::Kinetic;
    if (name == "diffusive")
        return RegimeKind::Diffusive;
    if (name == "custom")
        return RegimeKind::Custom;
    throw Error(ErrorCode::InvalidParameter, "unknown regime kind '" + std::string(name) + "'");
}

namespace
{
Real diffusive_eta(Real epsilon) { return 1.0 / std::log(std::abs(std::log(epsilon))); }
} // namespace

std::optional<std::string> ScalingRegime::violation() const
{
    if (!(theta > 0.0 && theta <= 0.5))
        return "theta must lie in (0, 1/2]";
    if (!(epsilon > 0.0 && epsilon <= 0.5))
        return "epsilon must lie in (0, 1/2]";
    if (!(eta > 0.0 && eta <= 1.0))
        return "eta must lie in (0, 1]";
    if (!(beta >= 1.0))
        return "beta must be at least 1";
    if (!(gamma > 0.0))
        return "gamma must be positive";
    if (kind == RegimeKind::Kinetic && eta != 1.0)
        return "kinetic regime requires eta = 1";
    if (kind == RegimeKind::Diffusive && std::abs(eta - diffusive_eta(epsilon)) > 1e-12)
        return "diffusive regime requires eta = 1/log|log epsilon|";
    if (kind != RegimeKind::Custom && theta > std::pow(epsilon, gamma))
        return "coupling theta <= epsilon^gamma violated";
    return std::nullopt;
}

ScalingRegime regime_from_theta(Real theta, Real gamma, RegimeKind kind, Real beta, std::optional<Real> eta)
{
    require(theta > 0.0 && theta <= 0.5, ErrorCode::InvalidParameter, "theta must lie in (0, 1/2]");
    require(gamma > 0.0, ErrorCode::InvalidParameter, "gamma must be positive");
    require(beta >= 1.0, ErrorCode::InvalidParameter, "beta must be at least 1");
    ScalingRegime r;
    r.theta = theta;
    r.gamma = gamma;
    r.beta = beta;
    r.kind = kind;
    r.epsilon = std::pow(theta, 1.0 / gamma);
    require(r.epsilon > 0.0 && r.epsilon <= 0.5, ErrorCode::InvalidParameter,
            "epsilon = theta^(1/gamma) must lie in (0, 1/2]");
    switch (kind)
    {
    case RegimeKind::Kinetic:
        r.eta = 1.0;
        break;
    case RegimeKind::Diffusive:
        r.eta = diffusive_eta(r.epsilon);
        require(r.eta > 0.0 && r.eta <= 1.0, ErrorCode::InvalidParameter,
                "diffusive eta = 1/log|log epsilon| falls outside (0, 1]; epsilon too large");
        break;
    case RegimeKind::Custom:
        r.eta = eta.value_or(1.0);
        require(r.eta > 0.0, ErrorCode::InvalidParameter, "eta must be positive");
        break;
    }
    return r;
}

ScalingRegime custom_regime(Real theta, Real epsilon, Real eta, Real beta, Real gamma)
{
    require(theta > 0.0 && epsilon > 0.0 && eta > 0.0 && gamma > 0.0, ErrorCode::InvalidParameter,
            "theta, epsilon, eta and gamma must be positive");
    require(beta >= 1.0, ErrorCode::InvalidParameter, "beta must be at least 1");
    return ScalingRegime{theta, epsilon, eta, beta, gamma, RegimeKind::Custom};
}

DimensionlessParameters physical_to_dimensionless(const PhysicalScenario& s)
{
    require(s.k0 > 0.0 && s.l0 > 0.0 && s.w0 > 0.0 && s.Z > 0.0 && s.sigma > 0.0,
            ErrorCode::InvalidParameter, "physical scenario values must be positive");
    DimensionlessParameters p;
    p.theta = 1.0 / (s.k0 * s.l0);
    p.epsilon = s.l0 / s.w0;
    p.eta = s.Z / (s.k0 * s.w0);
    p.consistency_residual = std::abs(s.sigma * s.sigma * s.Z * s.Z * s.Z * s.l0 * s.l0 / (s.w0 * s.w0) - 1.0);
    p.wide_beam = p.epsilon < 0.5;
    return p;
}

bool ValidationReport::all_passed() const
{
    for (const auto& c : checks)
        if (!c.passed)
            return false;
    return true;
}

const AssumptionCheck* ValidationReport::find(std::string_view name) const
{
    for (const auto& c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

ValidationReport validate_assumptions(const MediumSpec& spec, const ScalingRegime& regime,
                                      const ValidationOptions& opts)
{
    ValidationReport report;
    const int d = spec.d();
    const Real lx = spec.ell_x();

    {
        bool ok = true;
        Real worst = kInf;
        for (int i = 0; i <= opts.probes; ++i)
        {
            VectorXr k = VectorXr::Constant(d, 12.0 * Real(i) / (opts.probes * lx));
            const Real v = spectrum_Rhat(spec, k);
            worst = std::min(worst, v);
            ok = ok && v >= 0.0 && std::isfinite(v);
        }
        std::ostringstream os;
        os << "min over probes " << worst;
        report.checks.push_back({"spectrum_nonnegative", ok, os.str()});
    }
    {
        bool ok = true;
        std::string detail;
        try
        {
            const auto m = spectral_moment(spec, d + 3, 1);
            ok = std::isfinite(m.value);
            detail = "lambda_1 = " + std::to_string(m.value);
        }
        catch (const Error& e)
        {
            ok = false;
            detail = e.what();
        }
        report.checks.push_back({"spectral_moment_finite", ok, detail});
    }
    {
        const MatrixXr xi = hessian_Xi(spec);
        Eigen::SelfAdjointEigenSolver<MatrixXr> eig(xi);
        const Real top = eig.eigenvalues().maxCoeff();
        std::ostringstream os;
        os << "largest eigenvalue " << top;
        report.checks.push_back({"hessian_negative_definite", top < 0.0, os.str()});
    }
    {
        bool ok = true;
        const Real r0 = covariance_R(spec, VectorXr::Zero(d));
        for (int i = 1; i <= opts.probes; ++i)
        {
            VectorXr x = VectorXr::Constant(d, 8.0 * lx * Real(i) / opts.probes);
            ok = ok && covariance_R(spec, x) <= r0 && covariance_R(spec, x) == covariance_R(spec, VectorXr(-x));
        }
        report.checks.push_back({"covariance_maximal_at_origin", ok && r0 > 0.0,
                                 "R(0) = " + std::to_string(r0)});
    }
    {
        auto v = regime.violation();
        // The coupling inequality is reported separately for every kind.
        if (v && *v == "coupling theta <= epsilon^gamma violated")
            v.reset();
        report.checks.push_back({"regime_invariants", !v.has_value(), v.value_or("ok")});
    }
    {
        const Real bound = std::pow(regime.epsilon, regime.gamma);
        std::ostringstream os;
        os << "theta = " << regime.theta << ", epsilon^gamma = " << bound;
        report.checks.push_back({"regime_coupling", regime.theta <= bound, os.str()});
    }
    report.small_parameter_metric =
        std::pow(regime.theta, opts.alpha) * std::exp(opts.metric_constant / (regime.eta * regime.eta));
    return report;
}

} // namespace pxspk

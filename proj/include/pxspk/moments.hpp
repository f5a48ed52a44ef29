#pragma once

#include "pxspk/medium.hpp"
#include "pxspk/propagate.hpp"
#include "pxspk/quadrature.hpp"
#include "pxspk/scaling.hpp"
#include "pxspk/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <bit>
#include <iosfwd>
#include <optional>
#include <vector>

namespace pxspk
{

enum class MomentFormula
{
    KineticM11,
    DiffusiveM11,
    PrelimitM11,
    MeanField,
    WickPredicted,
};

std::string_view to_string(MomentFormula f);

struct AnalyticMoment
{
    Complex value{};
    MomentFormula formula = MomentFormula::KineticM11;
    Real quadrature_error = 0.0;
    /// Pre-limit companion value where the limit itself is degenerate
    /// (the damped mean field in the diffusive regime).
    std::optional<Complex> companion;
};

/// Moment request: E[prod_j phi(z, r, x_j) prod_l phi*(z, r, y_l)].
struct MomentSpec
{
    int p = 1;
    int q = 1;
    VectorXr r;
    MatrixXr X; // d x p
    MatrixXr Y; // d x q
    Real z = 1.0;
};

/// Gaussian model of a complex vector: mean, gamma_jl = E[Z_j Z_l*], pseudo_jl = E[Z_j Z_l].
struct CovarianceModel
{
    VectorXc mean;
    MatrixXc gamma;
    MatrixXc pseudo;
    bool circular = true;

    Index size() const { return gamma.rows(); }
    /// Max |pseudo| relative to max |gamma|; 0 when pseudo is empty.
    Real circularity_defect() const;
};

/// Q(tau, zeta) = exp((z/eta^2) int_0^1 [R(tau + 2 s z zeta) - R(0)] ds), 32-node Gauss-Legendre.
template <class DerivedT, class DerivedZ>
Real q_kernel(const MediumSpec& spec, const ScalingRegime& regime, Real z, const Eigen::MatrixBase<DerivedT>& tau,
              const Eigen::MatrixBase<DerivedZ>& zeta)
{
    require(z > 0.0, ErrorCode::InvalidParameter, "q_kernel needs z > 0");
    const auto& rule = gauss_legendre(32);
    const Real r0 = spec.R0();
    Real acc = 0.0;
    for (Index i = 0; i < rule.nodes.size(); ++i)
    {
        const Real s = 0.5 * (rule.nodes(i) + 1.0);
        acc += 0.5 * rule.weights(i) * (covariance_R(spec, tau + (2.0 * s * z) * zeta) - r0);
    }
    return std::exp(z / (regime.eta * regime.eta) * acc);
}

inline Real q_kernel(const MediumSpec& spec, const ScalingRegime& regime, Real z, Real tau, Real zeta)
{
    using V1 = Eigen::Matrix<Real, 1, 1>;
    return q_kernel(spec, regime, z, V1::Constant(tau), V1::Constant(zeta));
}

/// E phi: e^{-R(0) z/(2 eta^2)} u0(r). In the diffusive regime the limit is 0
/// and the damped value is reported as the companion.
AnalyticMoment mean_field(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                          const VectorXr& r);

/// Kinetic-limit M11 (eta = 1). beta > 1: |u0(r)|^2 Q(y - x, 0). beta = 1: the
/// (xi, r') integral with the r' transform of |u0|^2 taken in closed form for a
/// Gaussian source (adaptive quadrature otherwise, d = 1 only) and an adaptive xi quadrature.
AnalyticMoment m11_kinetic(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                           const VectorXr& r, const VectorXr& x, const VectorXr& y,
                           const QuadratureOptions& opts = {});

/// Diffusive-limit M11. beta > 1: |u0(r)|^2 exp((z/2) (y-x)^T Xi (y-x)). beta = 1:
/// e^{z (y-x)^T Xi (y-x)/8} e^{-3i (y-x).r/(4z)} (G(z^3) * [e^{3i (y-x).r'/(4z)} |u0|^2])(r)
/// by FFT convolution.
AnalyticMoment m11_diffusive(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                             const VectorXr& r, const VectorXr& x, const VectorXr& y);

/// Green's function of dG/dt + (2/3) div(Xi grad G) = 0, G(0) = delta.
template <class Derived>
Real diffusion_kernel_G(const MediumSpec& spec, Real t, const Eigen::MatrixBase<Derived>& r)
{
    require(t > 0.0, ErrorCode::InvalidParameter, "diffusion kernel needs t > 0");
    const MatrixXr D = (-2.0 / 3.0) * hessian_Xi(spec);
    const MatrixXr Dt = D * t;
    const Real det = (4.0 * kPi * Dt).determinant();
    const Real quad = r.dot(Dt.ldlt().solve(VectorXr(r)));
    return std::exp(-0.25 * quad) / std::sqrt(det);
}
inline Real diffusion_kernel_G(const MediumSpec& spec, Real t, Real r)
{
    return diffusion_kernel_G(spec, t, Eigen::Matrix<Real, 1, 1>::Constant(r));
}

enum class PrelimitMethod
{
    /// One d-dimensional integral over the centre wavenumber (Gaussian sources).
    Reduced,
    /// The literal (xi, zeta) double integral, d = 1 only.
    DoubleSpectral,
};

/// Pre-limit two-point function E[phi(z, r, x) phi*(z, r', y')] of the Ito model,
/// evaluated at physical points x_p = r/eps^beta + eta x and y_p = r'/eps^beta + eta y'.
AnalyticMoment m11_prelimit(const MediumSpec& spec, const ScalingRegime& regime, const SourceSpec& source, Real z,
                            const VectorXr& r, const VectorXr& r_prime, const VectorXr& x,
                            const VectorXr& y_prime, PrelimitMethod method = PrelimitMethod::Reduced,
                            const QuadratureOptions& opts = {});

/// Permanent by Ryser's formula with Gray-code updates, O(2^n n).
template <class Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    const Index n = a.rows();
    require(a.cols() == n, ErrorCode::InvalidParameter, "permanent needs a square matrix");
    if (n == 0)
        return Scalar(1);
    require(n <= 30, ErrorCode::TooLarge, "permanent order too large");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_sums = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    Scalar total(0);
    std::uint64_t gray = 0;
    const std::uint64_t count = std::uint64_t(1) << n;
    for (std::uint64_t k = 1; k < count; ++k)
    {
        const std::uint64_t next = k ^ (k >> 1);
        const std::uint64_t flipped = next ^ gray;
        const int col = std::countr_zero(flipped);
        if (next & flipped)
            row_sums += a.col(col);
        else
            row_sums -= a.col(col);
        gray = next;
        Scalar prod = row_sums.prod();
        const int bits = std::popcount(gray);
        total += ((n - bits) % 2 == 0) ? prod : Scalar(-prod);
    }
    return total;
}

/// Gaussian prediction of E[prod_{j in P} phi_j prod_{l in Q} phi_l*] for a
/// circular model: sum over partial pairings of mean products times permanents.
Complex wick_predict(const CovarianceModel& model, const std::vector<Index>& P, const std::vector<Index>& Q);

/// Shorthand with P = {0..p-1} and Q = {0..q-1}.
Complex wick_predict(const CovarianceModel& model, int p, int q);

/// lambda = (1/2) C^{p+q} (p+q)^2 z int <s> <k>^{2 + (p+q) alpha} |C^(s, k)| ds dk.
/// d0 defaults to the medium dimension.
Real remainder_lambda(const MediumSpec& spec, int p, int q, Real z, Real alpha, Real C = 1.0,
                      std::optional<int> d0 = std::nullopt);

/// g(xi, k) = |xi|^2 - |xi - k|^2 = 2 k.xi - |k|^2.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar g_phase(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& k)
{
    return 2.0 * k.dot(xi) - k.squaredNorm();
}

/// One row of a moment table.
struct MomentRow
{
    MomentFormula formula = MomentFormula::KineticM11;
    int p = 1;
    int q = 1;
    Real z = 0.0;
    VectorXr r;
    VectorXr x;
    VectorXr y;
    Complex value{};
    Real quadrature_error = 0.0;
};

/// CSV with columns formula,p,q,z,r,x,y,re,im,quadrature_error; vector
/// coordinates are joined with ';'.
void write_moment_table(std::ostream& os, const std::vector<MomentRow>& rows);

} // namespace pxspk

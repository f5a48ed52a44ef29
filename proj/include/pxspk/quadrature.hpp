#pragma once

#include "pxspk/types.hpp"

#include <functional>
#include <limits>

namespace pxspk
{

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule
{
    VectorXr nodes;
    VectorXr weights;
};

/// Golub-Welsch construction, Newton-polished; cached per n.
const GaussLegendreRule& gauss_legendre(int n);

/// Same rule mapped onto [a, b].
GaussLegendreRule gauss_legendre(int n, Real a, Real b);

struct QuadratureResult
{
    Real value = 0.0;
    Real error = 0.0;
    int evaluations = 0;
};

struct QuadratureOptions
{
    Real abs_tol = 1e-10;
    Real rel_tol = 1e-12;
    int max_subdivisions = 4000;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]. Either bound may be
/// infinite, in which case the interval is mapped through x = t / (1 - t^2)
/// or x = a + t / (1 - t). Throws QuadratureNotConverged when the budget is
/// exhausted before the tolerance is met.
QuadratureResult integrate(const std::function<Real(Real)>& f, Real a, Real b,
                           const QuadratureOptions& opts = {});

/// Complex-valued variant; real and imaginary parts share the subdivision.
struct ComplexQuadratureResult
{
    Complex value{};
    Real error = 0.0;
    int evaluations = 0;
};

ComplexQuadratureResult integrate_complex(const std::function<Complex(Real)>& f, Real a, Real b,
                                          const QuadratureOptions& opts = {});

inline constexpr Real kInf = std::numeric_limits<Real>::infinity();

} // namespace pxspk

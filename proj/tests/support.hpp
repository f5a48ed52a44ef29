#pragma once

#include "pxspk/types.hpp"

#include <doctest.h>

#include <cmath>

namespace pxspk::test
{

inline Real rel_err(Real a, Real b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Real rel_l2(const VectorXc& a, const VectorXc& b) { return (a - b).norm() / b.norm(); }

/// |estimate - target| within k standard errors.
inline bool within_se(Real estimate, Real target, Real se, Real k) { return std::abs(estimate - target) <= k * se; }

} // namespace pxspk::test

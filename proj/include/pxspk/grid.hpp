#pragma once

#include "pxspk/types.hpp"

#include <array>
#include <vector>

namespace pxspk
{

/// Periodic transverse grid of n^d points on [-L/2, L/2)^d plus the solver step.
/// Flat storage is row-major; node i along an axis sits at x = (i - n/2) * dx,
/// so x = 0 is a node. Wavevectors are xi = 2 pi j / L with j in [-n/2, n/2).
struct Grid
{
    int d = 1;
    int n = 0;
    Real length = 0.0;
    Real dz = 0.0;

    Grid() = default;
    Grid(int d, int n, Real length, Real dz);

    Index size() const { return d == 1 ? Index(n) : Index(n) * n; }
    Real dx() const { return length / n; }
    Real cell_volume() const { return d == 1 ? dx() : dx() * dx(); }
    std::vector<int> dims() const { return std::vector<int>(std::size_t(d), n); }

    Real coordinate(Index i) const { return Real(i - n / 2) * dx(); }
    Real wavenumber(Index m) const;

    /// Per-axis node indices of a flat index.
    std::array<Index, 2> unflatten(Index flat) const;
    /// Physical position of a flat index (length d).
    VectorXr position(Index flat) const;
    /// Wavevector of a flat index in DFT order (length d).
    VectorXr wavevector(Index flat) const;
    /// |xi|^2 for every flat index in DFT order.
    VectorXr wavenumber_squared() const;
    Real max_wavenumber() const { return kPi / dx(); }

    bool same_transverse(const Grid& o) const { return d == o.d && n == o.n && length == o.length; }
};

} // namespace pxspk

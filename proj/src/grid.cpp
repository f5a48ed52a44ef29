#include "pxspk/grid.hpp"

#include "pxspk/fft.hpp"

namespace pxspk
{

Grid::Grid(int d_, int n_, Real length_, Real dz_) : d(d_), n(n_), length(length_), dz(dz_)
{
    require(d == 1 || d == 2, ErrorCode::InvalidParameter, "grid dimension must be 1 or 2");
    require(n >= 8 && (n & (n - 1)) == 0, ErrorCode::InvalidParameter,
            "grid size must be a power of two >= 8");
    require(length > 0.0, ErrorCode::InvalidParameter, "grid length must be positive");
    require(dz > 0.0, ErrorCode::InvalidParameter, "solver step must be positive");
}

Real Grid::wavenumber(Index m) const { return kTwoPi * Real(signed_frequency(m, n)) / length; }

std::array<Index, 2> Grid::unflatten(Index flat) const
{
    if (d == 1)
        return {flat, 0};
    return {flat / n, flat % n};
}

VectorXr Grid::position(Index flat) const
{
    const auto idx = unflatten(flat);
    VectorXr x(d);
    for (int a = 0; a < d; ++a)
        x(a) = coordinate(idx[std::size_t(a)]);
    return x;
}

VectorXr Grid::wavevector(Index flat) const
{
    const auto idx = unflatten(flat);
    VectorXr k(d);
    for (int a = 0; a < d; ++a)
        k(a) = wavenumber(idx[std::size_t(a)]);
    return k;
}

VectorXr Grid::wavenumber_squared() const
{
    VectorXr k2(size());
    for (Index f = 0; f < size(); ++f)
        k2(f) = wavevector(f).squaredNorm();
    return k2;
}

} // namespace pxspk

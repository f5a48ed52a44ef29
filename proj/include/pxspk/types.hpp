#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pxspk
{

using Real = double;
using Complex = std::complex<Real>;
using Index = Eigen::Index;

using VectorXr = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using VectorXc = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using MatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixXc = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-major storage is used wherever a matrix holds one record per row
/// (slabs of a medium block, realizations of an ensemble).
using RowMatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXc = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr Real kPi = 3.14159265358979323846264338327950288;
inline constexpr Real kTwoPi = 2.0 * kPi;

enum class ErrorCode
{
    InvalidParameter,
    QuadratureNotConverged,
    GridTooCoarse,
    StepOutsideBlock,
    DomainTooSmall,
    GridMismatch,
    StepTooCoarse,
    UnsupportedProfile,
    PointOutsideDomain,
    TooLarge,
    InsufficientSamples,
    DegenerateIntensity,
    ParseError,
    SchemaError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Shortest round-trip decimal representation of a double.
std::string format_real(Real v);

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition)
        throw Error(code, what);
}

} // namespace pxspk

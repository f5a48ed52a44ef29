#include "pxspk/types.hpp"

#include <charconv>

namespace pxspk
{

std::string_view to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::InvalidParameter:
        return "InvalidParameter";
    case ErrorCode::QuadratureNotConverged:
        return "QuadratureNotConverged";
    case ErrorCode::GridTooCoarse:
        return "GridTooCoarse";
    case ErrorCode::StepOutsideBlock:
        return "StepOutsideBlock";
    case ErrorCode::DomainTooSmall:
        return "DomainTooSmall";
    case ErrorCode::GridMismatch:
        return "GridMismatch";
    case ErrorCode::StepTooCoarse:
        return "StepTooCoarse";
    case ErrorCode::UnsupportedProfile:
        return "UnsupportedProfile";
    case ErrorCode::PointOutsideDomain:
        return "PointOutsideDomain";
    case ErrorCode::TooLarge:
        return "TooLarge";
    case ErrorCode::InsufficientSamples:
        return "InsufficientSamples";
    case ErrorCode::DegenerateIntensity:
        return "DegenerateIntensity";
    case ErrorCode::ParseError:
        return "ParseError";
    case ErrorCode::SchemaError:
        return "SchemaError";
    case ErrorCode::IoError:
        return "IoError";
    }
    return "Unknown";
}

std::string format_real(Real v)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace pxspk

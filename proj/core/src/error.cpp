#include "hdx/error.hpp"

#include <cmath>
#include <cstdlib>

namespace hdx {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::MixedDimension: return "MixedDimension";
    case ErrorKind::ZeroWeight: return "ZeroWeight";
    case ErrorKind::DuplicateTopFace: return "DuplicateTopFace";
    case ErrorKind::IsolatedVertex: return "IsolatedVertex";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::EmptyPart: return "EmptyPart";
    case ErrorKind::TruncationExceedsRank: return "TruncationExceedsRank";
    case ErrorKind::NotAFace: return "NotAFace";
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::EmptyWalk: return "EmptyWalk";
    case ErrorKind::NotPartite: return "NotPartite";
    case ErrorKind::OverlappingColors: return "OverlappingColors";
    case ErrorKind::NotReversible: return "NotReversible";
    case ErrorKind::InconsistentMarginals: return "InconsistentMarginals";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::OrderingViolated: return "OrderingViolated";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SizeCap: return "SizeCap";
    case ErrorKind::DimensionArithmetic: return "DimensionArithmetic";
    case ErrorKind::ParameterRange: return "ParameterRange";
    case ErrorKind::ColorSize: return "ColorSize";
    case ErrorKind::ZeroConditioning: return "ZeroConditioning";
    case ErrorKind::PartialGlobal: return "PartialGlobal";
    case ErrorKind::SupportMismatch: return "SupportMismatch";
    case ErrorKind::OrphanA: return "OrphanA";
    case ErrorKind::MarginalMismatch: return "MarginalMismatch";
    case ErrorKind::NoGoodColors: return "NoGoodColors";
    case ErrorKind::InvalidInput: return "InvalidInput";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
{
}

void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

std::size_t size_cap(std::size_t default_cap)
{
    const char* env = std::getenv("HDX_SIZE_CAP");
    if (env == nullptr)
        return default_cap;
    char* end = nullptr;
    double factor = std::strtod(env, &end);
    if (end == env || !std::isfinite(factor) || factor < 1.0)
        return default_cap;
    double scaled = static_cast<double>(default_cap) * factor;
    if (scaled > 1e18)
        return static_cast<std::size_t>(1e18);
    return static_cast<std::size_t>(scaled);
}

void check_size_cap(double count, std::size_t default_cap, const std::string& what)
{
    std::size_t cap = size_cap(default_cap);
    if (count > static_cast<double>(cap))
        fail(ErrorKind::SizeCap, what + " needs " + std::to_string(static_cast<long long>(count)) +
                                     " entries, cap is " + std::to_string(cap) +
                                     " (raise with HDX_SIZE_CAP)");
}

}  // namespace hdx

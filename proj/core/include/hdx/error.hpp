#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hdx {

enum class ErrorKind {
    MixedDimension,
    ZeroWeight,
    DuplicateTopFace,
    IsolatedVertex,
    DimensionTooLarge,
    EmptyPart,
    TruncationExceedsRank,
    NotAFace,
    LevelOutOfRange,
    EmptyWalk,
    NotPartite,
    OverlappingColors,
    NotReversible,
    InconsistentMarginals,
    NotApplicable,
    HypothesisViolated,
    OrderingViolated,
    TooLarge,
    SizeCap,
    DimensionArithmetic,
    ParameterRange,
    ColorSize,
    ZeroConditioning,
    PartialGlobal,
    SupportMismatch,
    OrphanA,
    MarginalMismatch,
    NoGoodColors,
    InvalidInput,
};

const char* to_string(ErrorKind kind);

/**
 * Library exception. Every failure raised by the core library carries a kind
 * so the command-line front end can map it to an exit code.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/**
 * Scale a default size cap by the HDX_SIZE_CAP environment variable.
 *
 * HDX_SIZE_CAP is read as a positive multiplier; values below 1 are ignored
 * so the variable can only raise caps.
 */
std::size_t size_cap(std::size_t default_cap);

/** Throw SizeCap when `count` exceeds `size_cap(default_cap)`. */
void check_size_cap(double count, std::size_t default_cap, const std::string& what);

}  // namespace hdx

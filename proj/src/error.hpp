#pragma once

#include <stdexcept>
#include <string>

namespace leadlag {

// One code per distinct failure mode surfaced by the library. Pipeline
// stages map these onto per-unit skip records or process exit codes.
enum class Errc {
    TooShort,
    NonPositivePrice,
    GranularityMismatch,
    InsufficientOverlap,
    ZeroVariance,
    WindowTooSmall,
    WindowTooLarge,
    RankDeficient,
    DimensionMismatch,
    InvalidDegreesOfFreedom,
    NonPositiveDenominator,
    Unconverged,
    WeightDomain,
    EmptySequence,
    BandTooNarrow,
    AllTied,
    UniverseTooSmall,
    TooShortForLag,
    AllNull,
    MarketAlignmentFailure,
    CyclicLinks,
    SpecDomain,
    IoFailure,
    ParseError,
    DomainError,
    MissingDirectory,
    MalformedRow,
    MalformedMap,
    StateError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, std::string(errc_name(code)) + ": " + what);
}

} // namespace leadlag

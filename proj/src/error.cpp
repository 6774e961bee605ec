#include "error.hpp"

namespace leadlag {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::TooShort: return "TooShort";
        case Errc::NonPositivePrice: return "NonPositivePrice";
        case Errc::GranularityMismatch: return "GranularityMismatch";
        case Errc::InsufficientOverlap: return "InsufficientOverlap";
        case Errc::ZeroVariance: return "ZeroVariance";
        case Errc::WindowTooSmall: return "WindowTooSmall";
        case Errc::WindowTooLarge: return "WindowTooLarge";
        case Errc::RankDeficient: return "RankDeficient";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InvalidDegreesOfFreedom: return "InvalidDegreesOfFreedom";
        case Errc::NonPositiveDenominator: return "NonPositiveDenominator";
        case Errc::Unconverged: return "Unconverged";
        case Errc::WeightDomain: return "WeightDomain";
        case Errc::EmptySequence: return "EmptySequence";
        case Errc::BandTooNarrow: return "BandTooNarrow";
        case Errc::AllTied: return "AllTied";
        case Errc::UniverseTooSmall: return "UniverseTooSmall";
        case Errc::TooShortForLag: return "TooShortForLag";
        case Errc::AllNull: return "AllNull";
        case Errc::MarketAlignmentFailure: return "MarketAlignmentFailure";
        case Errc::CyclicLinks: return "CyclicLinks";
        case Errc::SpecDomain: return "SpecDomain";
        case Errc::IoFailure: return "IoFailure";
        case Errc::ParseError: return "ParseError";
        case Errc::DomainError: return "DomainError";
        case Errc::MissingDirectory: return "MissingDirectory";
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::MalformedMap: return "MalformedMap";
        case Errc::StateError: return "StateError";
    }
    return "Unknown";
}

} // namespace leadlag

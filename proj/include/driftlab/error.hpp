#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftlab {

enum class ErrorKind {
    NonComposable,
    MissingComponent,
    NotAutomorphism,
    ShapeMismatch,
    InvalidObject,
    InvalidMorphism,
    UniverseEscape,
    NoWitness,
    InvalidDistribution,
    DomainError,
    NotMonotone,
    PhaseOverflow,
    NotAClosedLoop,
    PartialPhaseMap,
    InvalidPeriod,
    DimMismatch,
    CapExceeded,
    NoConvergence,
    UndefinedClaim,
    NonFinite,
    LengthMismatch,
    ParseError,
    UnresolvedReference,
    MissingSection,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::NonComposable: return "NonComposable";
    case ErrorKind::MissingComponent: return "MissingComponent";
    case ErrorKind::NotAutomorphism: return "NotAutomorphism";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvalidObject: return "InvalidObject";
    case ErrorKind::InvalidMorphism: return "InvalidMorphism";
    case ErrorKind::UniverseEscape: return "UniverseEscape";
    case ErrorKind::NoWitness: return "NoWitness";
    case ErrorKind::InvalidDistribution: return "InvalidDistribution";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::PhaseOverflow: return "PhaseOverflow";
    case ErrorKind::NotAClosedLoop: return "NotAClosedLoop";
    case ErrorKind::PartialPhaseMap: return "PartialPhaseMap";
    case ErrorKind::InvalidPeriod: return "InvalidPeriod";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::UndefinedClaim: return "UndefinedClaim";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnresolvedReference: return "UnresolvedReference";
    case ErrorKind::MissingSection: return "MissingSection";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace driftlab

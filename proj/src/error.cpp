#include "idm/error.hpp"

namespace idm {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidFlagCombination: return "InvalidFlagCombination";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorKind::EmptyRiskSet: return "EmptyRiskSet";
    case ErrorKind::ZeroEvents: return "ZeroEvents";
    case ErrorKind::DegenerateBandwidth: return "DegenerateBandwidth";
    case ErrorKind::NegativeIncrement: return "NegativeIncrement";
    case ErrorKind::RootNotBracketed: return "RootNotBracketed";
    case ErrorKind::TooManyFailures: return "TooManyFailures";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_input_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidFlagCombination:
    case ErrorKind::NegativeTime:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::MissingValue:
    case ErrorKind::ParseError:
    case ErrorKind::ConfigError:
    case ErrorKind::ZeroEvents:
    case ErrorKind::DegenerateBandwidth:
    case ErrorKind::IoError:
      return true;
    default:
      return false;
  }
}

}  // namespace idm

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace transtte {

enum class ErrorKind {
  // ingestion / input validation
  MissingFile,
  SchemaViolation,
  DanglingEndpoint,
  UnknownSegment,
  BrokenChain,
  NonPositiveTime,
  TooFewTrips,
  LengthMismatch,
  Empty,
  CoordinateOutOfRange,
  UnknownCategory,
  NonPositiveRadius,
  InvalidRequest,
  UsageError,
  // graph / routing
  UnknownNode,
  Unreachable,
  EmptyGraph,
  EmptyNetwork,
  // missing dependencies
  MissingWeights,
  MissingModel,
  CityNotLoaded,
  // model
  InvalidConfig,
  ShapeMismatch,
  NonFiniteActivation,
  NonFinite,
  EmptyDataset,
  // persistence
  IoError,
  VersionMismatch,
  CorruptFile,
};

inline constexpr ErrorKind kAllErrorKinds[] = {
    ErrorKind::MissingFile,         ErrorKind::SchemaViolation,
    ErrorKind::DanglingEndpoint,    ErrorKind::UnknownSegment,
    ErrorKind::BrokenChain,         ErrorKind::NonPositiveTime,
    ErrorKind::TooFewTrips,         ErrorKind::LengthMismatch,
    ErrorKind::Empty,               ErrorKind::CoordinateOutOfRange,
    ErrorKind::UnknownCategory,     ErrorKind::NonPositiveRadius,
    ErrorKind::InvalidRequest,      ErrorKind::UsageError,
    ErrorKind::UnknownNode,         ErrorKind::Unreachable,
    ErrorKind::EmptyGraph,          ErrorKind::EmptyNetwork,
    ErrorKind::MissingWeights,      ErrorKind::MissingModel,
    ErrorKind::CityNotLoaded,       ErrorKind::InvalidConfig,
    ErrorKind::ShapeMismatch,       ErrorKind::NonFiniteActivation,
    ErrorKind::NonFinite,           ErrorKind::EmptyDataset,
    ErrorKind::IoError,             ErrorKind::VersionMismatch,
    ErrorKind::CorruptFile,
};

std::string_view to_string(ErrorKind kind);

/// HTTP status class for an error: 400 bad input, 404 unknown entity,
/// 409 missing dependency, 500 internal.
int http_status(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace transtte

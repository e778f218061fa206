#include "transtte/error.hpp"

namespace transtte {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorKind::UnknownSegment: return "UnknownSegment";
    case ErrorKind::BrokenChain: return "BrokenChain";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::TooFewTrips: return "TooFewTrips";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::CoordinateOutOfRange: return "CoordinateOutOfRange";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorKind::InvalidRequest: return "InvalidRequest";
    case ErrorKind::UsageError: return "UsageError";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::EmptyNetwork: return "EmptyNetwork";
    case ErrorKind::MissingWeights: return "MissingWeights";
    case ErrorKind::MissingModel: return "MissingModel";
    case ErrorKind::CityNotLoaded: return "CityNotLoaded";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
  }
  return "Unknown";
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SchemaViolation:
    case ErrorKind::BrokenChain:
    case ErrorKind::NonPositiveTime:
    case ErrorKind::TooFewTrips:
    case ErrorKind::LengthMismatch:
    case ErrorKind::Empty:
    case ErrorKind::CoordinateOutOfRange:
    case ErrorKind::UnknownCategory:
    case ErrorKind::NonPositiveRadius:
    case ErrorKind::InvalidRequest:
    case ErrorKind::UsageError:
    case ErrorKind::EmptyDataset:
      return 400;
    case ErrorKind::UnknownSegment:
    case ErrorKind::UnknownNode:
    case ErrorKind::Unreachable:
    case ErrorKind::CityNotLoaded:
      return 404;
    case ErrorKind::MissingWeights:
    case ErrorKind::MissingModel:
      return 409;
    case ErrorKind::MissingFile:
    case ErrorKind::DanglingEndpoint:
    case ErrorKind::EmptyGraph:
    case ErrorKind::EmptyNetwork:
    case ErrorKind::InvalidConfig:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::NonFiniteActivation:
    case ErrorKind::NonFinite:
    case ErrorKind::IoError:
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptFile:
      return 500;
  }
  return 500;
}

}  // namespace transtte

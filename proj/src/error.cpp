#include "hgformer/error.hpp"

namespace hgformer {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EdgeTooSmall: return "EdgeTooSmall";
    case ErrorKind::NodeIdOutOfRange: return "NodeIdOutOfRange";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::DuplicateNode: return "DuplicateNode";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::NotAScalar: return "NotAScalar";
    case ErrorKind::MissingGradient: return "MissingGradient";
    case ErrorKind::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::IsolatedNode: return "IsolatedNode";
    case ErrorKind::NegativeFeatureWithFractionalPower: return "NegativeFeatureWithFractionalPower";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::UnknownParameter: return "UnknownParameter";
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::MalformedLine: return "MalformedLine";
  }
  return "Unknown";
}

bool is_numeric(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonFiniteInput:
    case ErrorKind::NonFiniteLoss:
    case ErrorKind::MissingGradient:
    case ErrorKind::NotAScalar:
      return true;
    default:
      return false;
  }
}

}  // namespace hgformer

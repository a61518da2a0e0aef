#pragma once

#include <stdexcept>
#include <string>

namespace hgformer {

enum class ErrorKind {
  // hypergraph
  EdgeTooSmall,
  NodeIdOutOfRange,
  NonPositiveWeight,
  DuplicateNode,
  // tensors / numerics
  ShapeMismatch,
  NonFiniteInput,
  InvalidProbability,
  EmptyMask,
  LabelOutOfRange,
  NotAScalar,
  MissingGradient,
  GammaOutOfRange,
  NonFiniteLoss,
  // baselines
  IsolatedNode,
  NegativeFeatureWithFractionalPower,
  // train / data
  TooFewClasses,
  UnknownParameter,
  InvalidParameters,
  FileNotFound,
  MalformedLine,
};

const char* to_string(ErrorKind kind) noexcept;

/// Usage-level failures (bad input data) vs. numerical failures; the CLI maps
/// these onto distinct exit codes.
bool is_numeric(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hgformer

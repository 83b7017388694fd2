// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attnfloat {

enum class ErrorKind {
  // dump-model
  MissingInput,
  MalformedManifest,
  MissingTensor,
  ShapeMismatch,
  NotRowStochastic,
  CausalityViolation,
  InvalidAnnotation,
  // analyses
  InvalidArgument,
  TensorUnavailable,
  DegenerateSequence,
  ParadigmMismatch,
  QKUnavailable,
  EmptyPartition,
  NoNeedle,
  NoDecodeEvents,
  ZeroNormSlice,
  EmptyRegion,
  MissingRegionLabels,
  InsufficientDistractors,
  MissingPrediction,
  // reporting
  LabelMismatch,
  SchemaViolation,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace attnfloat

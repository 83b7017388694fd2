// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/error.hpp"

namespace attnfloat {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::MalformedManifest: return "MalformedManifest";
    case ErrorKind::MissingTensor: return "MissingTensor";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NotRowStochastic: return "NotRowStochastic";
    case ErrorKind::CausalityViolation: return "CausalityViolation";
    case ErrorKind::InvalidAnnotation: return "InvalidAnnotation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TensorUnavailable: return "TensorUnavailable";
    case ErrorKind::DegenerateSequence: return "DegenerateSequence";
    case ErrorKind::ParadigmMismatch: return "ParadigmMismatch";
    case ErrorKind::QKUnavailable: return "QKUnavailable";
    case ErrorKind::EmptyPartition: return "EmptyPartition";
    case ErrorKind::NoNeedle: return "NoNeedle";
    case ErrorKind::NoDecodeEvents: return "NoDecodeEvents";
    case ErrorKind::ZeroNormSlice: return "ZeroNormSlice";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::MissingRegionLabels: return "MissingRegionLabels";
    case ErrorKind::InsufficientDistractors: return "InsufficientDistractors";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
    case ErrorKind::LabelMismatch: return "LabelMismatch";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
  }
  return "Unknown";
}

}  // namespace attnfloat

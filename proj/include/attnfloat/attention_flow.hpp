// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attnfloat/dump.hpp"
#include "attnfloat/matrix.hpp"

namespace attnfloat {

enum class NormalizeMode {
  Column,  // divide by Σ_i, the operative choice since augmented rows already sum to 1
  Row,     // standard rollout
};

enum class StepSelection { PerStep, StepAveraged };

struct RolloutConfig {
  double alpha = 0.5;
  NormalizeMode normalize_mode = NormalizeMode::Column;
  StepSelection step_selection = StepSelection::StepAveraged;
};

NormalizeMode parse_normalize_mode(std::string_view s);

struct InfluenceMatrix {
  Matrix R;
  std::size_t layers_used = 0;
};

struct RegionFlowMatrix {
  std::vector<std::string> labels;
  Matrix raw;      // block means of R
  Matrix display;  // raw, row-normalized (zero rows stay zero)
};

/// α·A + (1−α)·I.
Matrix residual_augment(const Matrix& attention, double alpha);

/// Divides every entry by its column sum (Column) or row sum (Row). Throws
/// ZeroNormSlice naming the first all-zero column/row.
Matrix flow_normalize(const Matrix& augmented, NormalizeMode mode);

/// Left-to-right product Ã^0 · Ã^1 ⋯ Ã^{L-1} of augmented, normalized
/// matrices.
InfluenceMatrix rollout(const std::vector<Matrix>& layer_attention, const RolloutConfig& config);

/// Rollout over the head-averaged attention of every layer. `step` picks the
/// denoising step for PerStep selection; StepAveraged ignores it.
InfluenceMatrix rollout(const AttentionDump& dump, std::size_t step, const RolloutConfig& config);

/// R^region[p][q] = mean of R over I_p × I_q, then row-normalized for display.
RegionFlowMatrix region_flow(const InfluenceMatrix& influence, const std::vector<RegionAnnotation>& regions);

// ---------------------------------------------------------------------------
// Gold-document shift

enum class GoldShiftVerdict { Tracking, Sunk, NoVariation, Mixed };

std::string_view to_string(GoldShiftVerdict v);

struct GoldShiftEntry {
  std::string gold_label;
  std::string peak_label;  // argmax target of the Answer row, Answer excluded
  double peak_share = 0.0;
  RegionFlowMatrix flow;
};

struct GoldShiftReport {
  std::vector<GoldShiftEntry> entries;
  GoldShiftVerdict verdict = GoldShiftVerdict::Mixed;
};

/// Gold region of a dump: the region containing the needle start.
std::optional<std::string> gold_region_label(const AttentionDump& dump);

/// `gold_labels` may be empty, in which case each dump's gold region is
/// taken from its needle annotation.
GoldShiftReport gold_shift_report(const std::vector<AttentionDump>& dumps, const std::vector<std::string>& gold_labels,
                                  const RolloutConfig& config = {});

/// Verdict over precomputed flows; exposed for callers that already hold
/// region matrices.
GoldShiftReport gold_shift_from_flows(const std::vector<RegionFlowMatrix>& flows,
                                      const std::vector<std::string>& gold_labels);

}  // namespace attnfloat

// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "attnfloat/dump.hpp"
#include "attnfloat/matrix.hpp"

namespace attnfloat {

/// Post-softmax attention of one head. Uses the stored ATTN tensor when
/// present, otherwise recomputes softmax(Q K^T / sqrt(d_h)) with the causal
/// mask for ARM dumps.
Matrix head_attention(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head);

/// Attention row `row` of one head at (layer, step).
std::vector<double> attention_row(const AttentionDump& dump, std::size_t layer, std::size_t step,
                                  std::size_t head, std::size_t row);

/// Mean over heads of the post-softmax attention at (layer, step).
Matrix head_average(const AttentionDump& dump, std::size_t layer, std::size_t step);

/// Head-averaged attention additionally averaged over every denoising step.
Matrix step_averaged_head_average(const AttentionDump& dump, std::size_t layer);

/// Masked softmax over raw scores / sqrt(head_dim); rows with j > i are zeroed
/// when `causal` is set.
Matrix softmax_attention(const Matrix& scores, double scale, bool causal);

struct PositionAttentionProfile {
  std::size_t layer = 0;
  std::optional<std::size_t> step;  // empty when averaged over steps
  std::vector<double> received;
};

/// Column means of a head-averaged matrix: received[j] = (1/n) sum_i A[i, j].
/// For causal maps the mean runs over all n rows, zeros included, so early
/// positions are favoured by construction.
std::vector<double> column_means(const Matrix& head_avg);

PositionAttentionProfile received_attention(const AttentionDump& dump, std::size_t layer, std::size_t step);

/// Mean of the per-step profiles of one layer.
PositionAttentionProfile step_averaged_received_attention(const AttentionDump& dump, std::size_t layer);

struct DominantSet {
  std::size_t layer = 0;
  std::optional<std::size_t> step;
  double epsilon = 0.0;
  std::vector<std::size_t> positions;  // sorted
  std::vector<double> margins;         // parallel to positions; always > 0

  bool contains(std::size_t p) const;
};

/// Default threshold: three times the uniform share.
inline double default_epsilon(std::size_t seq_len) { return 3.0 / static_cast<double>(seq_len); }

/// Position j is dominant iff received[j] exceeds the mean of the other
/// positions by more than epsilon.
DominantSet detect_dominant(const PositionAttentionProfile& profile, double epsilon);

/// Sum of received attention over `positions`, as a percentage.
double absorption_rate(const PositionAttentionProfile& profile, const std::vector<std::size_t>& positions);
double absorption_rate(const AttentionDump& dump, const std::vector<std::size_t>& positions, std::size_t layer,
                       std::size_t step);

// ---------------------------------------------------------------------------
// Drift across denoising steps. Jaccard overlap and centroid are summary
// quantities for the step-wise heatmaps, not model-derived measurements.

struct DriftTrace {
  std::size_t layer = 0;
  std::vector<DominantSet> sets;              // one per step
  std::vector<double> jaccard;                // size T - 1
  std::vector<std::optional<double>> centroid;  // mean position of S(t)
};

/// |a ∩ b| / |a ∪ b|; two empty sets count as identical (1.0).
double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

DriftTrace drift_trace(const AttentionDump& dump, std::size_t layer, double epsilon);

/// Mean of the defined step centroids inside each band. `band_starts` are
/// the first steps of consecutive bands, the first must be 0. Bands without a
/// defined centroid yield nullopt.
std::vector<std::optional<double>> band_centroids(const DriftTrace& trace, const std::vector<std::size_t>& band_starts);

// ---------------------------------------------------------------------------
// Layer-wise absorption

enum class SinkSetMode { Detected, Bos };

struct LayerAbsorption {
  std::size_t layer = 0;
  std::vector<std::size_t> positions;
  double absorption = 0.0;
};

/// Position used as the sink for SinkSetMode::Bos: the start of a region
/// labelled "BOS" if annotated, otherwise 0.
std::size_t bos_position(const AttentionDump& dump);

/// One absorption value per layer. MDM profiles are averaged over steps before
/// detection; ARM dumps have a single step.
std::vector<LayerAbsorption> absorption_curve(const AttentionDump& dump, double epsilon,
                                              SinkSetMode mode = SinkSetMode::Detected);

}  // namespace attnfloat

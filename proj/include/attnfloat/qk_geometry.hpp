// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "attnfloat/dump.hpp"
#include "attnfloat/matrix.hpp"

namespace attnfloat {

inline constexpr double kDegenerateNorm = 1e-12;

/// Raw (unscaled) query-key scores split into a norm product and a cosine,
/// so that score = norm_product ⊙ cosine elementwise.
struct QKDecomposition {
  std::size_t layer = 0;
  std::size_t step = 0;
  std::optional<std::size_t> head;  // empty: mean of per-head panels
  Matrix score;
  Matrix norm_product;
  Matrix cosine;
  std::vector<std::size_t> floating_columns;
  std::vector<std::size_t> degenerate_queries;  // ‖Q_i‖ < kDegenerateNorm
  std::vector<std::size_t> degenerate_keys;
};

/// Decomposes Q Kᵀ for row-major Q [n×d] and K [n×d]. Zero-norm vectors get
/// cosine 0.
QKDecomposition decompose(const Matrix& q, const Matrix& k);

Matrix query_matrix(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head);
Matrix key_matrix(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head);

QKDecomposition decompose(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head);

/// Panel-wise mean of the per-head decompositions. The identity does not
/// hold on the averaged panels; use per-head decompositions for that.
QKDecomposition decompose_head_mean(const AttentionDump& dump, std::size_t layer, std::size_t step);

struct ComponentContrast {
  double floating_mean = 0.0;
  double other_mean = 0.0;
  double difference = 0.0;
};

struct ColumnContrast {
  std::size_t layer = 0;
  ComponentContrast score;
  ComponentContrast norm;
  ComponentContrast cosine;
};

/// Mean over all (i, j ∈ floating) minus mean over all (i, j ∉ floating),
/// per component.
ColumnContrast column_contrast(const QKDecomposition& decomp, const std::vector<std::size_t>& floating);

/// Per-head contrasts averaged over heads (statistics are averaged, never the
/// vectors).
ColumnContrast head_averaged_contrast(const AttentionDump& dump, std::size_t layer, std::size_t step,
                                      const std::vector<std::size_t>& floating);

struct DepthProfileEntry {
  std::size_t layer = 0;
  std::optional<ColumnContrast> contrast;  // empty: no valid partition at any step
  std::size_t steps_used = 0;
};

/// For every layer and step, detects floating columns from the received
/// attention and averages the head-averaged contrast over the steps that
/// give a non-empty partition.
std::vector<DepthProfileEntry> depth_profile(const AttentionDump& dump, double epsilon);

}  // namespace attnfloat

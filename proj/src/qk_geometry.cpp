// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/qk_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attnfloat/attn_stats.hpp"
#include "attnfloat/parallel.hpp"

namespace attnfloat {

QKDecomposition decompose(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols() || q.rows() != k.rows())
    throw Error(ErrorKind::ShapeMismatch, "Q and K must have identical shapes");
  QKDecomposition out;
  out.score = q * k.transpose();
  const Vector qn = q.rowwise().norm();
  const Vector kn = k.rowwise().norm();
  out.norm_product = qn * kn.transpose();
  out.cosine = Matrix::Zero(q.rows(), k.rows());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    if (qn(i) < kDegenerateNorm) out.degenerate_queries.push_back(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < k.rows(); ++j) {
      const double denom = out.norm_product(i, j);
      if (qn(i) < kDegenerateNorm || kn(j) < kDegenerateNorm || denom == 0.0) continue;
      out.cosine(i, j) = std::clamp(out.score(i, j) / denom, -1.0, 1.0);
    }
  }
  for (Eigen::Index j = 0; j < k.rows(); ++j)
    if (kn(j) < kDegenerateNorm) out.degenerate_keys.push_back(static_cast<std::size_t>(j));
  return out;
}

namespace {

Matrix load_head(const AttentionDump& dump, TensorKind kind, std::size_t layer, std::size_t step, std::size_t head) {
  const auto* t = dump.find(kind, layer, step);
  if (t == nullptr || !dump.has_qk(layer, step))
    throw Error(ErrorKind::QKUnavailable,
                "no Q/K tensors at layer " + std::to_string(layer) + " step " + std::to_string(step));
  if (head >= dump.num_heads) throw Error(ErrorKind::InvalidArgument, "head " + std::to_string(head) + " out of range");
  const std::size_t n = dump.seq_len, d = dump.head_dim;
  Matrix m(n, d);
  const float* src = t->data.data() + head * n * d;
  for (std::size_t i = 0; i < n * d; ++i) m.data()[i] = src[i];
  return m;
}

}  // namespace

Matrix query_matrix(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head) {
  return load_head(dump, TensorKind::Q, layer, step, head);
}

Matrix key_matrix(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head) {
  return load_head(dump, TensorKind::K, layer, step, head);
}

QKDecomposition decompose(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head) {
  QKDecomposition out = decompose(query_matrix(dump, layer, step, head), key_matrix(dump, layer, step, head));
  out.layer = layer;
  out.step = step;
  out.head = head;
  return out;
}

QKDecomposition decompose_head_mean(const AttentionDump& dump, std::size_t layer, std::size_t step) {
  QKDecomposition mean;
  mean.layer = layer;
  mean.step = step;
  for (std::size_t h = 0; h < dump.num_heads; ++h) {
    QKDecomposition d = decompose(dump, layer, step, h);
    if (h == 0) {
      mean.score = d.score;
      mean.norm_product = d.norm_product;
      mean.cosine = d.cosine;
    } else {
      mean.score += d.score;
      mean.norm_product += d.norm_product;
      mean.cosine += d.cosine;
    }
  }
  const double m = static_cast<double>(dump.num_heads);
  mean.score /= m;
  mean.norm_product /= m;
  mean.cosine /= m;
  return mean;
}

namespace {

ComponentContrast contrast_of(const Matrix& panel, const std::vector<bool>& is_floating) {
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_cols = 0, out_cols = 0;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    const double col = panel.col(j).sum();
    if (is_floating[static_cast<std::size_t>(j)]) {
      in_sum += col;
      ++in_cols;
    } else {
      out_sum += col;
      ++out_cols;
    }
  }
  const double rows = static_cast<double>(panel.rows());
  ComponentContrast c;
  c.floating_mean = in_sum / (rows * static_cast<double>(in_cols));
  c.other_mean = out_sum / (rows * static_cast<double>(out_cols));
  c.difference = c.floating_mean - c.other_mean;
  return c;
}

}  // namespace

ColumnContrast column_contrast(const QKDecomposition& decomp, const std::vector<std::size_t>& floating) {
  const auto n = static_cast<std::size_t>(decomp.score.cols());
  std::vector<bool> mask(n, false);
  std::size_t count = 0;
  for (auto p : floating) {
    if (p >= n) throw Error(ErrorKind::InvalidArgument, "floating column " + std::to_string(p) + " out of range");
    if (!mask[p]) ++count;
    mask[p] = true;
  }
  if (count == 0 || count == n)
    throw Error(ErrorKind::EmptyPartition, "floating columns and their complement must both be non-empty");
  ColumnContrast out;
  out.layer = decomp.layer;
  out.score = contrast_of(decomp.score, mask);
  out.norm = contrast_of(decomp.norm_product, mask);
  out.cosine = contrast_of(decomp.cosine, mask);
  return out;
}

namespace {

void accumulate(ComponentContrast& into, const ComponentContrast& c) {
  into.floating_mean += c.floating_mean;
  into.other_mean += c.other_mean;
  into.difference += c.difference;
}

void scale(ComponentContrast& c, double s) {
  c.floating_mean *= s;
  c.other_mean *= s;
  c.difference *= s;
}

}  // namespace

ColumnContrast head_averaged_contrast(const AttentionDump& dump, std::size_t layer, std::size_t step,
                                      const std::vector<std::size_t>& floating) {
  ColumnContrast acc;
  acc.layer = layer;
  for (std::size_t h = 0; h < dump.num_heads; ++h) {
    const ColumnContrast c = column_contrast(decompose(dump, layer, step, h), floating);
    accumulate(acc.score, c.score);
    accumulate(acc.norm, c.norm);
    accumulate(acc.cosine, c.cosine);
  }
  const double inv = 1.0 / static_cast<double>(dump.num_heads);
  scale(acc.score, inv);
  scale(acc.norm, inv);
  scale(acc.cosine, inv);
  return acc;
}

std::vector<DepthProfileEntry> depth_profile(const AttentionDump& dump, double epsilon) {
  std::vector<DepthProfileEntry> out(dump.num_layers);
  parallel_for(dump.num_layers, [&](std::size_t l) {
    DepthProfileEntry entry;
    entry.layer = l;
    ColumnContrast acc;
    acc.layer = l;
    for (std::size_t t = 0; t < dump.num_steps; ++t) {
      if (!dump.has_qk(l, t))
        throw Error(ErrorKind::QKUnavailable, "no Q/K tensors at layer " + std::to_string(l));
      const auto set = detect_dominant(received_attention(dump, l, t), epsilon);
      if (set.positions.empty() || set.positions.size() == dump.seq_len) continue;
      const ColumnContrast c = head_averaged_contrast(dump, l, t, set.positions);
      accumulate(acc.score, c.score);
      accumulate(acc.norm, c.norm);
      accumulate(acc.cosine, c.cosine);
      ++entry.steps_used;
    }
    if (entry.steps_used > 0) {
      const double inv = 1.0 / static_cast<double>(entry.steps_used);
      scale(acc.score, inv);
      scale(acc.norm, inv);
      scale(acc.cosine, inv);
      entry.contrast = acc;
    }
    out[l] = entry;
  });
  return out;
}

}  // namespace attnfloat

// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/attn_stats.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "attnfloat/parallel.hpp"

namespace attnfloat {

namespace {

std::string where(std::size_t layer, std::size_t step) {
  return "layer " + std::to_string(layer) + " step " + std::to_string(step);
}

void check_grid(const AttentionDump& dump, std::size_t layer, std::size_t step) {
  if (layer >= dump.num_layers || step >= dump.num_steps)
    throw Error(ErrorKind::TensorUnavailable, where(layer, step) + " is outside the dump");
}

Matrix qk_scores(const TensorRecord& q, const TensorRecord& k, std::size_t head, std::size_t n, std::size_t d) {
  Matrix qm(n, d), km(n, d);
  const float* qp = q.data.data() + head * n * d;
  const float* kp = k.data.data() + head * n * d;
  for (std::size_t i = 0; i < n * d; ++i) {
    qm.data()[i] = qp[i];
    km.data()[i] = kp[i];
  }
  return qm * km.transpose();
}

}  // namespace

Matrix softmax_attention(const Matrix& scores, double scale, bool causal) {
  const Eigen::Index n = scores.rows();
  Matrix out = Matrix::Zero(n, scores.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index limit = causal ? std::min<Eigen::Index>(i + 1, scores.cols()) : scores.cols();
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < limit; ++j) peak = std::max(peak, scores(i, j) * scale);
    double total = 0.0;
    for (Eigen::Index j = 0; j < limit; ++j) {
      out(i, j) = std::exp(scores(i, j) * scale - peak);
      total += out(i, j);
    }
    for (Eigen::Index j = 0; j < limit; ++j) out(i, j) /= total;
  }
  return out;
}

Matrix head_attention(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head) {
  check_grid(dump, layer, step);
  if (head >= dump.num_heads) throw Error(ErrorKind::TensorUnavailable, "head " + std::to_string(head) + " out of range");
  const std::size_t n = dump.seq_len;
  if (const auto* attn = dump.find(TensorKind::ATTN, layer, step)) {
    Matrix out(n, n);
    const float* src = attn->data.data() + head * n * n;
    for (std::size_t i = 0; i < n * n; ++i) out.data()[i] = src[i];
    return out;
  }
  const auto* q = dump.find(TensorKind::Q, layer, step);
  const auto* k = dump.find(TensorKind::K, layer, step);
  if (q == nullptr || k == nullptr)
    throw Error(ErrorKind::TensorUnavailable, "no ATTN or Q/K tensors at " + where(layer, step));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dump.head_dim));
  return softmax_attention(qk_scores(*q, *k, head, n, dump.head_dim), scale, dump.paradigm == Paradigm::ARM);
}

std::vector<double> attention_row(const AttentionDump& dump, std::size_t layer, std::size_t step, std::size_t head,
                                  std::size_t row) {
  check_grid(dump, layer, step);
  const std::size_t n = dump.seq_len;
  if (row >= n) throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(row) + " out of range");
  if (const auto* attn = dump.find(TensorKind::ATTN, layer, step); attn && head < dump.num_heads) {
    const float* src = attn->data.data() + (head * n + row) * n;
    return std::vector<double>(src, src + n);
  }
  const Matrix a = head_attention(dump, layer, step, head);
  return std::vector<double>(a.row(static_cast<Eigen::Index>(row)).begin(), a.row(static_cast<Eigen::Index>(row)).end());
}

Matrix head_average(const AttentionDump& dump, std::size_t layer, std::size_t step) {
  check_grid(dump, layer, step);
  const std::size_t n = dump.seq_len;
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t h = 0; h < dump.num_heads; ++h) sum += head_attention(dump, layer, step, h);
  return sum / static_cast<double>(dump.num_heads);
}

Matrix step_averaged_head_average(const AttentionDump& dump, std::size_t layer) {
  const std::size_t n = dump.seq_len;
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t t = 0; t < dump.num_steps; ++t) sum += head_average(dump, layer, t);
  return sum / static_cast<double>(dump.num_steps);
}

std::vector<double> column_means(const Matrix& head_avg) {
  const auto n = head_avg.rows();
  std::vector<double> out(static_cast<std::size_t>(head_avg.cols()), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < head_avg.cols(); ++j) out[static_cast<std::size_t>(j)] += head_avg(i, j);
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

PositionAttentionProfile received_attention(const AttentionDump& dump, std::size_t layer, std::size_t step) {
  return PositionAttentionProfile{layer, step, column_means(head_average(dump, layer, step))};
}

PositionAttentionProfile step_averaged_received_attention(const AttentionDump& dump, std::size_t layer) {
  std::vector<double> acc(dump.seq_len, 0.0);
  for (std::size_t t = 0; t < dump.num_steps; ++t) {
    const auto p = received_attention(dump, layer, t);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += p.received[j];
  }
  for (auto& v : acc) v /= static_cast<double>(dump.num_steps);
  return PositionAttentionProfile{layer, std::nullopt, std::move(acc)};
}

bool DominantSet::contains(std::size_t p) const { return std::binary_search(positions.begin(), positions.end(), p); }

DominantSet detect_dominant(const PositionAttentionProfile& profile, double epsilon) {
  const auto& a = profile.received;
  const std::size_t n = a.size();
  if (n < 2) throw Error(ErrorKind::DegenerateSequence, "dominant-position detection needs n >= 2");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be >= 0");

  double total = 0.0;
  for (double v : a) total += v;

  DominantSet out;
  out.layer = profile.layer;
  out.step = profile.step;
  out.epsilon = epsilon;
  const double others = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double threshold = (total - a[j]) / others + epsilon;
    if (a[j] > threshold) {
      out.positions.push_back(j);
      out.margins.push_back(a[j] - threshold);
    }
  }
  return out;
}

double absorption_rate(const PositionAttentionProfile& profile, const std::vector<std::size_t>& positions) {
  double sum = 0.0;
  for (std::size_t p : positions) {
    if (p >= profile.received.size())
      throw Error(ErrorKind::InvalidArgument, "position " + std::to_string(p) + " outside the sequence");
    sum += profile.received[p];
  }
  return sum * 100.0;
}

double absorption_rate(const AttentionDump& dump, const std::vector<std::size_t>& positions, std::size_t layer,
                       std::size_t step) {
  return absorption_rate(received_attention(dump, layer, step), positions);
}

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> sa(a), sb(b), common, all;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(all));
  return static_cast<double>(common.size()) / static_cast<double>(all.size());
}

DriftTrace drift_trace(const AttentionDump& dump, std::size_t layer, double epsilon) {
  if (dump.paradigm != Paradigm::MDM)
    throw Error(ErrorKind::ParadigmMismatch, "drift tracking needs an MDM dump with denoising steps");
  if (dump.num_steps < 2) throw Error(ErrorKind::DegenerateSequence, "drift tracking needs at least 2 steps");
  if (layer >= dump.num_layers) throw Error(ErrorKind::TensorUnavailable, "layer out of range");

  DriftTrace trace;
  trace.layer = layer;
  trace.sets.resize(dump.num_steps);
  parallel_for(dump.num_steps, [&](std::size_t t) {
    trace.sets[t] = detect_dominant(received_attention(dump, layer, t), epsilon);
  });
  for (const auto& s : trace.sets) {
    if (s.positions.empty()) {
      trace.centroid.emplace_back(std::nullopt);
      continue;
    }
    double sum = 0.0;
    for (auto p : s.positions) sum += static_cast<double>(p);
    trace.centroid.emplace_back(sum / static_cast<double>(s.positions.size()));
  }
  for (std::size_t t = 0; t + 1 < trace.sets.size(); ++t)
    trace.jaccard.push_back(jaccard(trace.sets[t].positions, trace.sets[t + 1].positions));
  return trace;
}

std::vector<std::optional<double>> band_centroids(const DriftTrace& trace, const std::vector<std::size_t>& band_starts) {
  if (band_starts.empty() || band_starts.front() != 0 || !std::is_sorted(band_starts.begin(), band_starts.end()))
    throw Error(ErrorKind::InvalidArgument, "band starts must be sorted and begin at step 0");
  std::vector<std::optional<double>> out;
  for (std::size_t b = 0; b < band_starts.size(); ++b) {
    const std::size_t lo = band_starts[b];
    const std::size_t hi = b + 1 < band_starts.size() ? band_starts[b + 1] : trace.centroid.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = lo; t < hi && t < trace.centroid.size(); ++t) {
      if (!trace.centroid[t]) continue;
      sum += *trace.centroid[t];
      ++count;
    }
    out.push_back(count ? std::optional<double>(sum / static_cast<double>(count)) : std::nullopt);
  }
  return out;
}

std::size_t bos_position(const AttentionDump& dump) {
  if (const auto* bos = dump.region("BOS")) return bos->span.start;
  return 0;
}

std::vector<LayerAbsorption> absorption_curve(const AttentionDump& dump, double epsilon, SinkSetMode mode) {
  std::vector<LayerAbsorption> curve(dump.num_layers);
  parallel_for(dump.num_layers, [&](std::size_t l) {
    const auto profile = step_averaged_received_attention(dump, l);
    LayerAbsorption row;
    row.layer = l;
    if (mode == SinkSetMode::Bos) {
      row.positions = {bos_position(dump)};
    } else {
      row.positions = detect_dominant(profile, epsilon).positions;
    }
    row.absorption = absorption_rate(profile, row.positions);
    curve[l] = std::move(row);
  });
  return curve;
}

}  // namespace attnfloat

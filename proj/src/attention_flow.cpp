// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/attention_flow.hpp"

#include <algorithm>
#include <string>

#include "attnfloat/attn_stats.hpp"
#include "attnfloat/parallel.hpp"

namespace attnfloat {

NormalizeMode parse_normalize_mode(std::string_view s) {
  if (s == "column") return NormalizeMode::Column;
  if (s == "row") return NormalizeMode::Row;
  throw Error(ErrorKind::InvalidArgument, "normalize mode must be column or row, got '" + std::string(s) + "'");
}

Matrix residual_augment(const Matrix& attention, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
  if (attention.rows() != attention.cols()) throw Error(ErrorKind::ShapeMismatch, "attention matrix must be square");
  Matrix out = alpha * attention;
  out.diagonal().array() += 1.0 - alpha;
  return out;
}

Matrix flow_normalize(const Matrix& augmented, NormalizeMode mode) {
  Matrix out = augmented;
  if (mode == NormalizeMode::Column) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double s = out.col(j).sum();
      if (s == 0.0) throw Error(ErrorKind::ZeroNormSlice, "column " + std::to_string(j) + " sums to zero");
      out.col(j) /= s;
    }
  } else {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const double s = out.row(i).sum();
      if (s == 0.0) throw Error(ErrorKind::ZeroNormSlice, "row " + std::to_string(i) + " sums to zero");
      out.row(i) /= s;
    }
  }
  return out;
}

InfluenceMatrix rollout(const std::vector<Matrix>& layer_attention, const RolloutConfig& config) {
  if (layer_attention.empty()) throw Error(ErrorKind::InvalidArgument, "rollout needs at least one layer");
  InfluenceMatrix out;
  for (const auto& a : layer_attention) {
    const Matrix adjusted = flow_normalize(residual_augment(a, config.alpha), config.normalize_mode);
    if (out.layers_used == 0) {
      out.R = adjusted;
    } else {
      if (adjusted.rows() != out.R.cols()) throw Error(ErrorKind::ShapeMismatch, "layer matrices differ in size");
      out.R = (out.R * adjusted).eval();
    }
    ++out.layers_used;
  }
  return out;
}

InfluenceMatrix rollout(const AttentionDump& dump, std::size_t step, const RolloutConfig& config) {
  if (config.step_selection == StepSelection::PerStep && step >= dump.num_steps)
    throw Error(ErrorKind::TensorUnavailable, "step " + std::to_string(step) + " out of range");
  std::vector<Matrix> layers(dump.num_layers);
  parallel_for(dump.num_layers, [&](std::size_t l) {
    layers[l] = config.step_selection == StepSelection::StepAveraged ? step_averaged_head_average(dump, l)
                                                                     : head_average(dump, l, step);
  });
  return rollout(layers, config);
}

RegionFlowMatrix region_flow(const InfluenceMatrix& influence, const std::vector<RegionAnnotation>& regions) {
  const auto n = static_cast<std::size_t>(influence.R.rows());
  for (std::size_t a = 0; a < regions.size(); ++a) {
    const auto& r = regions[a];
    if (r.span.empty()) throw Error(ErrorKind::EmptyRegion, "region " + r.label + " is empty");
    if (r.span.end > n) throw Error(ErrorKind::InvalidArgument, "region " + r.label + " extends past the sequence");
    for (std::size_t b = a + 1; b < regions.size(); ++b) {
      const auto& s = regions[b];
      if (r.span.start < s.span.end && s.span.start < r.span.end)
        throw Error(ErrorKind::InvalidArgument, "regions " + r.label + " and " + s.label + " overlap");
    }
  }

  const auto P = static_cast<Eigen::Index>(regions.size());
  RegionFlowMatrix out;
  out.raw = Matrix::Zero(P, P);
  for (const auto& r : regions) out.labels.push_back(r.label);
  for (Eigen::Index p = 0; p < P; ++p) {
    const Span& ip = regions[static_cast<std::size_t>(p)].span;
    for (Eigen::Index q = 0; q < P; ++q) {
      const Span& iq = regions[static_cast<std::size_t>(q)].span;
      // Extended-precision sum: k copies of one double add up exactly, so a
      // constant block returns its constant bit for bit.
      long double block = 0.0L;
      for (auto i = ip.start; i < ip.end; ++i)
        for (auto j = iq.start; j < iq.end; ++j)
          block += influence.R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      out.raw(p, q) = static_cast<double>(block / static_cast<long double>(ip.size() * iq.size()));
    }
  }
  out.display = out.raw;
  for (Eigen::Index p = 0; p < P; ++p) {
    const double s = out.display.row(p).sum();
    if (s > 0.0) out.display.row(p) /= s;
  }
  return out;
}

std::string_view to_string(GoldShiftVerdict v) {
  switch (v) {
    case GoldShiftVerdict::Tracking: return "tracking";
    case GoldShiftVerdict::Sunk: return "sunk";
    case GoldShiftVerdict::NoVariation: return "no variation";
    case GoldShiftVerdict::Mixed: return "mixed";
  }
  return "mixed";
}

std::optional<std::string> gold_region_label(const AttentionDump& dump) {
  if (!dump.needle) return std::nullopt;
  for (const auto& r : dump.regions)
    if (r.span.contains(dump.needle->needle_span.start)) return r.label;
  return std::nullopt;
}

namespace {

std::optional<Eigen::Index> label_index(const RegionFlowMatrix& flow, std::string_view label) {
  for (std::size_t i = 0; i < flow.labels.size(); ++i)
    if (flow.labels[i] == label) return static_cast<Eigen::Index>(i);
  return std::nullopt;
}

}  // namespace

GoldShiftReport gold_shift_from_flows(const std::vector<RegionFlowMatrix>& flows,
                                      const std::vector<std::string>& gold_labels) {
  if (flows.size() != gold_labels.size())
    throw Error(ErrorKind::InvalidArgument, "need one gold label per dump");
  GoldShiftReport report;
  for (std::size_t d = 0; d < flows.size(); ++d) {
    const auto& flow = flows[d];
    const auto answer = label_index(flow, "Answer");
    const auto bos = label_index(flow, "BOS");
    const auto gold = label_index(flow, gold_labels[d]);
    if (!answer || !bos || !gold)
      throw Error(ErrorKind::MissingRegionLabels,
                  "dump " + std::to_string(d) + " needs BOS, Answer and gold region '" + gold_labels[d] + "'");
    GoldShiftEntry entry;
    entry.gold_label = gold_labels[d];
    entry.flow = flow;
    Eigen::Index best = -1;
    for (Eigen::Index q = 0; q < flow.display.cols(); ++q) {
      if (q == *answer) continue;
      if (best < 0 || flow.display(*answer, q) > flow.display(*answer, best)) best = q;
    }
    if (best >= 0) {
      entry.peak_label = flow.labels[static_cast<std::size_t>(best)];
      entry.peak_share = flow.display(*answer, best);
    }
    report.entries.push_back(std::move(entry));
  }

  const auto& e = report.entries;
  const bool same_gold = std::all_of(e.begin(), e.end(), [&](const auto& x) { return x.gold_label == e.front().gold_label; });
  if (e.empty() || same_gold) {
    report.verdict = GoldShiftVerdict::NoVariation;
  } else if (std::all_of(e.begin(), e.end(), [](const auto& x) { return x.peak_label == x.gold_label; })) {
    report.verdict = GoldShiftVerdict::Tracking;
  } else if (std::all_of(e.begin(), e.end(), [](const auto& x) { return x.peak_label == "BOS"; })) {
    report.verdict = GoldShiftVerdict::Sunk;
  } else {
    report.verdict = GoldShiftVerdict::Mixed;
  }
  return report;
}

GoldShiftReport gold_shift_report(const std::vector<AttentionDump>& dumps, const std::vector<std::string>& gold_labels,
                                  const RolloutConfig& config) {
  if (!gold_labels.empty() && gold_labels.size() != dumps.size())
    throw Error(ErrorKind::InvalidArgument, "need one gold label per dump");
  std::vector<std::string> labels = gold_labels;
  if (labels.empty()) {
    for (std::size_t d = 0; d < dumps.size(); ++d) {
      auto g = gold_region_label(dumps[d]);
      if (!g) throw Error(ErrorKind::MissingRegionLabels, "dump " + std::to_string(d) + " has no gold region annotation");
      labels.push_back(*g);
    }
  }
  std::vector<RegionFlowMatrix> flows;
  for (const auto& dump : dumps) {
    if (dump.regions.empty()) throw Error(ErrorKind::MissingRegionLabels, "dump has no region annotations");
    flows.push_back(region_flow(rollout(dump, 0, config), dump.regions));
  }
  return gold_shift_from_flows(flows, labels);
}

}  // namespace attnfloat

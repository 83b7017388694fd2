// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "attnfloat/report.hpp"

namespace attnfloat {

enum class StressKind { Noise, Position, Integration };

std::string_view to_string(StressKind k);
StressKind parse_stress_kind(std::string_view s);

struct StressDoc {
  std::string text;
  bool is_gold = false;
  bool operator==(const StressDoc&) const = default;
};

struct StressItem {
  std::string variant_id;
  StressKind kind = StressKind::Noise;
  std::string base_id;
  /// distractor count (NOISE), 1-based gold index (POSITION) or permutation
  /// index (INTEGRATION)
  std::size_t param = 0;
  std::string question;
  std::vector<StressDoc> docs;
  std::vector<std::string> gold_answers;
  bool operator==(const StressItem&) const = default;
};

struct StressPlan {
  StressKind kind = StressKind::Noise;
  std::vector<StressItem> items;
};

struct BaseItem {
  std::string id;
  std::string question;
  std::vector<std::string> evidence_docs;  // NOISE/POSITION use the first as gold
  std::vector<std::string> gold_answers;
};

struct PlanParams {
  std::vector<std::size_t> distractor_counts;  // NOISE
  std::vector<std::size_t> gold_indices;       // POSITION, 1-based
  std::size_t num_docs = 10;                   // POSITION context size
  std::size_t permutations = 0;                // INTEGRATION; 0 = all
  std::uint64_t seed = 0;
};

/// Pure function of (base items, distractor pool, kind, params).
StressPlan build_plan(const std::vector<BaseItem>& base_items, const std::vector<std::string>& distractors,
                      StressKind kind, const PlanParams& params);

std::string plan_to_json(const StressPlan& plan);
StressPlan plan_from_json(std::string_view text);

/// Base file: {"items": [{id, question, evidence_docs, gold_answers}], "distractors": [...]}.
void base_from_json(std::string_view text, std::vector<BaseItem>& items, std::vector<std::string>& distractors);

using Predictions = std::map<std::string, std::string>;
Predictions predictions_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Metrics

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize_answer(std::string_view text);
std::vector<std::string> answer_tokens(std::string_view text);

/// 1 iff some normalized gold answer is a substring of the normalized
/// prediction.
int accuracy(std::string_view prediction, const std::vector<std::string>& gold_answers);

/// Max over gold answers of token-overlap F1.
double token_f1(std::string_view prediction, const std::vector<std::string>& gold_answers);

inline constexpr std::string_view kMetricDefinitions[] = {
    "Acc: 1 if any normalized gold answer is a substring of the normalized prediction, else 0",
    "F1: max over gold answers of token-overlap F1 on normalized text",
    "normalization: lowercase, strip punctuation, drop a/an/the, collapse whitespace",
};

struct VariantScore {
  std::string variant_id;
  std::string base_id;
  std::size_t param = 0;
  int acc = 0;
  double f1 = 0.0;
};

struct CurvePoint {
  std::size_t param = 0;
  std::size_t items = 0;
  double acc = 0.0;
  double f1 = 0.0;
};

struct ScoreReport {
  StressKind kind = StressKind::Noise;
  std::vector<VariantScore> variants;
  std::vector<CurvePoint> curve;  // sorted by param
  double spread_acc = 0.0;        // POSITION: max - min over the curve
  double spread_f1 = 0.0;
  double mean_acc = 0.0;          // INTEGRATION: over permutations
  double variance_acc = 0.0;      // population variance
  double mean_f1 = 0.0;
  double variance_f1 = 0.0;
};

ScoreReport aggregate(const StressPlan& plan, const Predictions& predictions);

/// Curve rows plus summary rows; metric definitions go into the notes.
Table report_table(const ScoreReport& report);
Table variant_table(const ScoreReport& report);

}  // namespace attnfloat

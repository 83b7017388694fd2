// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "attnfloat/dump.hpp"
#include "attnfloat/matrix.hpp"
#include "attnfloat/report.hpp"

namespace attnfloat {

/// Per-head retrieval scores: the fraction of decode events at which a head's
/// top-k attention touches the needle span.
struct RetrievalScoreMap {
  std::size_t num_layers = 0;
  std::size_t num_heads = 0;
  std::size_t k = 1;
  std::size_t event_count = 0;
  std::vector<std::size_t> hits;  // [layer * num_heads + head]

  double score(std::size_t layer, std::size_t head) const;
  Matrix scores() const;
  std::vector<double> layer_means() const;
};

/// Indices of the k largest entries; ties go to the lower index.
std::vector<std::size_t> top_k_indices(const std::vector<double>& row, std::size_t k);

RetrievalScoreMap retrieval_scores(const AttentionDump& dump, std::size_t k = 1);

/// L×m grid (rows are layers) for heatmap export.
HeatmapSpec score_heatmap(const RetrievalScoreMap& map);

/// One row per layer with the mean score over its heads.
Table layer_mean_table(const RetrievalScoreMap& map);

/// CSV with columns layer,head,hits,events,k,score. Import rebuilds the map
/// from the integer columns, so round trips are exact.
std::string retrieval_csv(const RetrievalScoreMap& map);
RetrievalScoreMap parse_retrieval_csv(std::string_view text);

}  // namespace attnfloat

// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/retrieval_heads.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "attnfloat/attn_stats.hpp"
#include "attnfloat/parallel.hpp"

namespace attnfloat {

double RetrievalScoreMap::score(std::size_t layer, std::size_t head) const {
  if (event_count == 0) return 0.0;
  return static_cast<double>(hits.at(layer * num_heads + head)) / static_cast<double>(event_count);
}

Matrix RetrievalScoreMap::scores() const {
  Matrix m(num_layers, num_heads);
  for (std::size_t l = 0; l < num_layers; ++l)
    for (std::size_t h = 0; h < num_heads; ++h)
      m(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(h)) = score(l, h);
  return m;
}

std::vector<double> RetrievalScoreMap::layer_means() const {
  std::vector<double> out(num_layers, 0.0);
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (std::size_t h = 0; h < num_heads; ++h) out[l] += score(l, h);
    out[l] /= static_cast<double>(num_heads);
  }
  return out;
}

std::vector<std::size_t> top_k_indices(const std::vector<double>& row, std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, row.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
  idx.resize(k);
  return idx;
}

RetrievalScoreMap retrieval_scores(const AttentionDump& dump, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  if (!dump.needle) throw Error(ErrorKind::NoNeedle, "dump has no needle annotation");
  const auto& needle = *dump.needle;
  if (needle.decode_events.empty()) throw Error(ErrorKind::NoDecodeEvents, "needle annotation has no decode events");

  RetrievalScoreMap map;
  map.num_layers = dump.num_layers;
  map.num_heads = dump.num_heads;
  map.k = k;
  map.event_count = needle.decode_events.size();
  map.hits.assign(dump.num_layers * dump.num_heads, 0);

  parallel_for(map.hits.size(), [&](std::size_t cell) {
    const std::size_t layer = cell / dump.num_heads;
    const std::size_t head = cell % dump.num_heads;
    std::size_t hits = 0;
    for (const auto& ev : needle.decode_events) {
      const auto row = attention_row(dump, layer, ev.step, head, ev.position);
      const auto top = top_k_indices(row, k);
      if (std::any_of(top.begin(), top.end(), [&](std::size_t j) { return needle.needle_span.contains(j); })) ++hits;
    }
    map.hits[cell] = hits;
  });
  return map;
}

HeatmapSpec score_heatmap(const RetrievalScoreMap& map) {
  HeatmapSpec spec;
  spec.values = map.scores();
  for (std::size_t l = 0; l < map.num_layers; ++l) spec.row_labels.push_back("L" + std::to_string(l));
  for (std::size_t h = 0; h < map.num_heads; ++h) spec.col_labels.push_back("H" + std::to_string(h));
  spec.title = "retrieval score (k=" + std::to_string(map.k) + ", events=" + std::to_string(map.event_count) + ")";
  spec.colormap = Colormap::Sequential;
  return spec;
}

Table layer_mean_table(const RetrievalScoreMap& map) {
  Table t;
  t.schema = {{"layer", ColumnType::Integer}, {"mean_score", ColumnType::Real}};
  const auto means = map.layer_means();
  for (std::size_t l = 0; l < means.size(); ++l) t.add_row({static_cast<std::int64_t>(l), means[l]});
  return t;
}

namespace {

const std::vector<Column>& retrieval_schema() {
  static const std::vector<Column> schema{{"layer", ColumnType::Integer}, {"head", ColumnType::Integer},
                                          {"hits", ColumnType::Integer},  {"events", ColumnType::Integer},
                                          {"k", ColumnType::Integer},     {"score", ColumnType::Real}};
  return schema;
}

}  // namespace

std::string retrieval_csv(const RetrievalScoreMap& map) {
  Table t;
  t.schema = retrieval_schema();
  for (std::size_t l = 0; l < map.num_layers; ++l)
    for (std::size_t h = 0; h < map.num_heads; ++h)
      t.add_row({static_cast<std::int64_t>(l), static_cast<std::int64_t>(h),
                 static_cast<std::int64_t>(map.hits[l * map.num_heads + h]),
                 static_cast<std::int64_t>(map.event_count), static_cast<std::int64_t>(map.k), map.score(l, h)});
  return emit_table(t, TableFormat::CSV);
}

RetrievalScoreMap parse_retrieval_csv(std::string_view text) {
  const Table t = parse_table(text, retrieval_schema());
  RetrievalScoreMap map;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> cells;
  for (const auto& row : t.rows) {
    const auto layer = static_cast<std::size_t>(std::get<std::int64_t>(row[0]));
    const auto head = static_cast<std::size_t>(std::get<std::int64_t>(row[1]));
    cells.emplace_back(layer, head, static_cast<std::size_t>(std::get<std::int64_t>(row[2])));
    map.num_layers = std::max(map.num_layers, layer + 1);
    map.num_heads = std::max(map.num_heads, head + 1);
    map.event_count = static_cast<std::size_t>(std::get<std::int64_t>(row[3]));
    map.k = static_cast<std::size_t>(std::get<std::int64_t>(row[4]));
  }
  if (cells.size() != map.num_layers * map.num_heads)
    throw Error(ErrorKind::SchemaViolation, "retrieval CSV does not cover a full layer x head grid");
  map.hits.assign(cells.size(), 0);
  for (const auto& [l, h, hits] : cells) map.hits[l * map.num_heads + h] = hits;
  return map;
}

}  // namespace attnfloat

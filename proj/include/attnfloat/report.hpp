// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "attnfloat/matrix.hpp"

namespace attnfloat {

// ---------------------------------------------------------------------------
// Tables

enum class ColumnType { Integer, Real, Text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
};

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<Column> schema;
  std::vector<std::vector<Cell>> rows;
  /// Emitted as leading `# ` lines in CSV; not part of JSON output.
  std::vector<std::string> notes;

  void add_row(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

enum class TableFormat { CSV, JSON };

/// Six significant digits, "%.6g"; non-finite values print as nan/inf.
std::string format_real(double v);

/// CSV: RFC-4180 quoting, "\n" line ends, header row always present. JSON: an
/// array of objects with keys in schema order. Throws SchemaViolation when a
/// row does not match the schema.
std::string emit_table(const Table& table, TableFormat format);

/// RFC-4180 records; unquoted lines starting with '#' are returned via
/// `comments` when non-null and otherwise skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, std::vector<std::string>* comments = nullptr);

/// Parses CSV produced by emit_table back into typed cells. The header must
/// match `schema` exactly.
Table parse_table(std::string_view csv, const std::vector<Column>& schema);

// ---------------------------------------------------------------------------
// Heatmaps

enum class Colormap { Sequential, Diverging };

struct Rgb {
  int r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// t in [0, 1] mapped linearly through the colormap's anchor colours.
Rgb colormap_color(Colormap map, double t);
std::string to_hex(Rgb c);

struct HeatmapSpec {
  Matrix values;
  std::vector<std::string> row_labels;  // empty: row indices
  std::vector<std::string> col_labels;  // empty: column indices
  std::string title;
  Colormap colormap = Colormap::Sequential;
  std::set<std::size_t> marked_columns;
};

/// Deterministic SVG; identical specs render to identical bytes. Cell colours
/// map [min, max] of the finite values linearly onto the colormap.
std::string render_heatmap(const HeatmapSpec& spec);

}  // namespace attnfloat

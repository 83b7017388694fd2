// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "attnfloat/error.hpp"

namespace attnfloat {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

namespace {

std::string_view type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Integer: return "integer";
    case ColumnType::Real: return "real";
    case ColumnType::Text: return "text";
  }
  return "text";
}

void check_row(const Table& table, std::size_t r) {
  const auto& row = table.rows[r];
  if (row.size() != table.schema.size())
    throw Error(ErrorKind::SchemaViolation, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                                " cells, schema has " + std::to_string(table.schema.size()));
  for (std::size_t c = 0; c < row.size(); ++c) {
    const auto type = table.schema[c].type;
    const bool ok = (type == ColumnType::Integer && std::holds_alternative<std::int64_t>(row[c])) ||
                    (type == ColumnType::Real && std::holds_alternative<double>(row[c])) ||
                    (type == ColumnType::Text && std::holds_alternative<std::string>(row[c]));
    if (!ok)
      throw Error(ErrorKind::SchemaViolation, "row " + std::to_string(r) + " column '" + table.schema[c].name +
                                                  "' is not " + std::string(type_name(type)));
  }
}

std::string cell_text(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_real(*d);
  return std::get<std::string>(cell);
}

std::string csv_field(const std::string& s) {
  const bool quote = s.find_first_of(",\"\r\n") != std::string::npos || (!s.empty() && s.front() == '#');
  if (!quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_table(const Table& table, TableFormat format) {
  for (std::size_t r = 0; r < table.rows.size(); ++r) check_row(table, r);

  if (format == TableFormat::JSON) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
      nlohmann::ordered_json obj = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto& name = table.schema[c].name;
        if (const auto* i = std::get_if<std::int64_t>(&row[c])) {
          obj[name] = *i;
        } else if (const auto* d = std::get_if<double>(&row[c])) {
          if (std::isfinite(*d))
            obj[name] = std::strtod(format_real(*d).c_str(), nullptr);
          else
            obj[name] = nullptr;
        } else {
          obj[name] = std::get<std::string>(row[c]);
        }
      }
      arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
  }

  std::string out;
  for (const auto& note : table.notes) out += "# " + note + "\n";
  for (std::size_t c = 0; c < table.schema.size(); ++c) out += (c ? "," : "") + csv_field(table.schema[c].name);
  out += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_field(cell_text(row[c]));
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text, std::vector<std::string>* comments) {
  std::vector<std::vector<std::string>> records;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] == '#') {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = n;
      std::string_view line = text.substr(i, end - i);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (comments) {
        line.remove_prefix(1);
        if (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        comments->emplace_back(line);
      }
      i = end + 1;
      continue;
    }
    std::vector<std::string> record;
    std::string field;
    bool done = false;
    while (!done) {
      field.clear();
      if (i < n && text[i] == '"') {
        ++i;
        while (true) {
          if (i >= n) throw Error(ErrorKind::SchemaViolation, "unterminated quoted CSV field");
          if (text[i] == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field += '"';
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          field += text[i++];
        }
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') field += text[i++];
      }
      record.push_back(field);
      if (i < n && text[i] == ',') {
        ++i;
        continue;
      }
      if (i < n && text[i] == '\r') ++i;
      if (i < n && text[i] == '\n') ++i;
      done = true;
    }
    records.push_back(std::move(record));
  }
  return records;
}

Table parse_table(std::string_view csv, const std::vector<Column>& schema) {
  Table table;
  table.schema = schema;
  auto records = parse_csv(csv, &table.notes);
  if (records.empty()) throw Error(ErrorKind::SchemaViolation, "CSV has no header row");
  const auto& header = records.front();
  if (header.size() != schema.size())
    throw Error(ErrorKind::SchemaViolation, "CSV header has " + std::to_string(header.size()) + " columns");
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (header[c] != schema[c].name)
      throw Error(ErrorKind::SchemaViolation, "CSV column " + std::to_string(c) + " is '" + header[c] + "'");
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != schema.size())
      throw Error(ErrorKind::SchemaViolation, "CSV record " + std::to_string(r) + " has wrong width");
    std::vector<Cell> row;
    for (std::size_t c = 0; c < rec.size(); ++c) {
      switch (schema[c].type) {
        case ColumnType::Integer: {
          char* end = nullptr;
          const long long v = std::strtoll(rec[c].c_str(), &end, 10);
          if (rec[c].empty() || *end != '\0')
            throw Error(ErrorKind::SchemaViolation, "'" + rec[c] + "' is not an integer");
          row.emplace_back(static_cast<std::int64_t>(v));
          break;
        }
        case ColumnType::Real: {
          char* end = nullptr;
          const double v = std::strtod(rec[c].c_str(), &end);
          if (rec[c].empty() || *end != '\0') throw Error(ErrorKind::SchemaViolation, "'" + rec[c] + "' is not a number");
          row.emplace_back(v);
          break;
        }
        case ColumnType::Text:
          row.emplace_back(rec[c]);
          break;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Heatmaps

namespace {

Rgb lerp(Rgb a, Rgb b, double t) {
  auto mix = [t](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * t)); };
  return Rgb{mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kSequentialHigh{8, 48, 107};
constexpr Rgb kDivergingLow{33, 102, 172};
constexpr Rgb kDivergingHigh{178, 24, 43};
constexpr Rgb kMissing{204, 204, 204};
constexpr Rgb kMarker{214, 39, 40};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        // XML 1.0 forbids most C0 controls even when escaped.
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

Rgb colormap_color(Colormap map, double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (map == Colormap::Sequential) return lerp(kWhite, kSequentialHigh, t);
  if (t <= 0.5) return lerp(kDivergingLow, kWhite, t * 2.0);
  return lerp(kWhite, kDivergingHigh, (t - 0.5) * 2.0);
}

std::string to_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string render_heatmap(const HeatmapSpec& spec) {
  const auto rows = static_cast<std::size_t>(spec.values.rows());
  const auto cols = static_cast<std::size_t>(spec.values.cols());
  if (rows == 0 || cols == 0) throw Error(ErrorKind::InvalidArgument, "heatmap matrix is empty");
  if (!spec.row_labels.empty() && spec.row_labels.size() != rows)
    throw Error(ErrorKind::LabelMismatch, std::to_string(spec.row_labels.size()) + " row labels for " +
                                              std::to_string(rows) + " rows");
  if (!spec.col_labels.empty() && spec.col_labels.size() != cols)
    throw Error(ErrorKind::LabelMismatch, std::to_string(spec.col_labels.size()) + " column labels for " +
                                              std::to_string(cols) + " columns");
  for (auto c : spec.marked_columns)
    if (c >= cols) throw Error(ErrorKind::LabelMismatch, "marked column " + std::to_string(c) + " out of range");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    const double v = spec.values.data()[i];
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool any_finite = std::isfinite(lo);
  const double range = any_finite ? hi - lo : 0.0;

  constexpr int cell = 12;
  constexpr int left = 90;
  constexpr int top = 40;
  constexpr int bottom = 70;
  constexpr int right = 20;
  const std::size_t row_stride = std::max<std::size_t>(1, (rows + 63) / 64);
  const std::size_t col_stride = std::max<std::size_t>(1, (cols + 63) / 64);
  const int width = left + static_cast<int>(cols) * cell + right;
  const int height = top + static_cast<int>(rows) * cell + bottom;

  auto row_label = [&](std::size_t i) { return spec.row_labels.empty() ? std::to_string(i) : spec.row_labels[i]; };
  auto col_label = [&](std::size_t j) { return spec.col_labels.empty() ? std::to_string(j) : spec.col_labels[j]; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"monospace\" font-size=\"8\">\n";
  svg << "<title>" << xml_escape(spec.title) << "</title>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"16\" font-size=\"11\">" << xml_escape(spec.title) << "</text>\n";
  svg << "<text x=\"" << left << "\" y=\"30\">range [" << (any_finite ? format_real(lo) : "nan") << ", "
      << (any_finite ? format_real(hi) : "nan") << "] "
      << (spec.colormap == Colormap::Sequential ? "sequential" : "diverging") << "</text>\n";

  svg << "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = spec.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      Rgb color = kMissing;
      if (std::isfinite(v)) color = colormap_color(spec.colormap, range > 0.0 ? (v - lo) / range : 0.0);
      svg << "<rect class=\"cell\" x=\"" << left + static_cast<int>(j) * cell << "\" y=\"" << top + static_cast<int>(i) * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << to_hex(color) << "\"><title>"
          << xml_escape(row_label(i)) << " / " << xml_escape(col_label(j)) << ": " << format_real(v)
          << "</title></rect>\n";
    }
  }
  svg << "</g>\n";

  svg << "<g id=\"row-labels\" text-anchor=\"end\">\n";
  for (std::size_t i = 0; i < rows; i += row_stride)
    svg << "<text x=\"" << left - 4 << "\" y=\"" << top + static_cast<int>(i) * cell + cell - 3 << "\">"
        << xml_escape(row_label(i)) << "</text>\n";
  svg << "</g>\n";

  const int axis_y = top + static_cast<int>(rows) * cell;
  svg << "<g id=\"col-labels\" text-anchor=\"end\">\n";
  for (std::size_t j = 0; j < cols; j += col_stride) {
    const int x = left + static_cast<int>(j) * cell + cell / 2;
    svg << "<text x=\"" << x << "\" y=\"" << axis_y + 14 << "\" transform=\"rotate(-60 " << x << ' ' << axis_y + 14
        << ")\">" << xml_escape(col_label(j)) << "</text>\n";
  }
  svg << "</g>\n";

  if (!spec.marked_columns.empty()) {
    svg << "<g id=\"markers\" fill=\"" << to_hex(kMarker) << "\">\n";
    for (auto j : spec.marked_columns) {
      const int x = left + static_cast<int>(j) * cell + cell / 2;
      svg << "<polygon class=\"marker\" points=\"" << x << ',' << axis_y + 1 << ' ' << x - 4 << ',' << axis_y + 7 << ' ' << x + 4 << ','
          << axis_y + 7 << "\"/>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace attnfloat

// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "attnfloat/error.hpp"

namespace attnfloat {

enum class Paradigm { ARM, MDM };
enum class TensorKind { ATTN, Q, K };

std::string_view to_string(Paradigm p);
std::string_view to_string(TensorKind k);
Paradigm parse_paradigm(std::string_view s);
TensorKind parse_tensor_kind(std::string_view s);

struct TokenRecord {
  std::int64_t position = 0;
  std::int64_t token_id = 0;
  std::string token_text;
  bool is_special = false;
};

/// Half-open [start, end) span of positions.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > start ? end - start : 0; }
  bool empty() const { return end <= start; }
  bool contains(std::size_t p) const { return p >= start && p < end; }
  bool operator==(const Span&) const = default;
};

struct RegionAnnotation {
  std::string label;
  Span span;
};

struct DecodeEvent {
  std::size_t step = 0;
  std::size_t position = 0;
  bool operator==(const DecodeEvent&) const = default;
};

struct NeedleAnnotation {
  Span needle_span;
  std::vector<DecodeEvent> decode_events;
};

struct StepTrace {
  std::size_t step = 0;
  std::set<std::size_t> masked_positions;
  std::set<std::size_t> newly_decoded;
};

/// One tensor payload. ATTN tensors have shape [m, n, n]; Q and K have
/// shape [m, n, d_h]. Data is row-major float32, exactly as stored on disk.
struct TensorRecord {
  TensorKind kind = TensorKind::ATTN;
  std::size_t layer = 0;
  std::size_t step = 0;
  std::vector<std::size_t> shape;
  std::string file;
  std::vector<float> data;

  std::size_t element_count() const;
};

struct TensorKey {
  TensorKind kind;
  std::size_t layer;
  std::size_t step;
  auto operator<=>(const TensorKey&) const = default;
};

/// A complete capture of one model run over one sequence.
struct AttentionDump {
  std::string model_id;
  Paradigm paradigm = Paradigm::MDM;
  std::size_t num_layers = 0;
  std::size_t num_heads = 0;
  std::size_t head_dim = 0;
  std::size_t seq_len = 0;
  std::size_t num_steps = 1;
  std::vector<TokenRecord> tokens;
  std::vector<RegionAnnotation> regions;
  std::optional<NeedleAnnotation> needle;
  std::vector<StepTrace> step_traces;
  std::map<TensorKey, TensorRecord> tensors;

  const TensorRecord* find(TensorKind kind, std::size_t layer, std::size_t step) const;
  bool has_attention(std::size_t layer, std::size_t step) const;
  bool has_qk(std::size_t layer, std::size_t step) const;
  const RegionAnnotation* region(std::string_view label) const;

  /// Inserts or replaces a tensor; fills in `file` with the canonical name.
  void put(TensorRecord record);
};

/// Canonical tensor file name: `{kind}_l{layer}_s{step}.bin`.
std::string tensor_file_name(TensorKind kind, std::size_t layer, std::size_t step);

// ---------------------------------------------------------------------------
// Validation

struct ValidationEntry {
  std::string check;
  bool passed = true;
  double deviation = 0.0;  // measured worst-case deviation, 0 when n/a
  std::string detail;
  ErrorKind failure_kind = ErrorKind::InvalidAnnotation;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  std::vector<std::string> notes;

  bool ok() const;
  const ValidationEntry* first_failure() const;
  const ValidationEntry* find(std::string_view check) const;
};

inline constexpr double kRowSumTolerance = 1e-4;
inline constexpr double kCausalTolerance = 1e-6;

/// Checks every dump invariant and reports pass/fail with measured
/// deviations. Never throws.
ValidationReport validate_dump(const AttentionDump& dump) noexcept;

// ---------------------------------------------------------------------------
// I/O

/// Reads manifest.json and every referenced tensor from `dir`, then validates
/// eagerly. Throws Error with the kind of the first failing invariant.
AttentionDump read_dump(const std::filesystem::path& dir);

/// Like read_dump but skips the validation pass; used by `validate` to report
/// on dumps that would otherwise be rejected.
AttentionDump read_dump_unchecked(const std::filesystem::path& dir);

/// Writes manifest.json plus one .bin per tensor. The manifest key order and
/// formatting are fixed so that write(read(d)) is byte-identical.
void write_dump(const AttentionDump& dump, const std::filesystem::path& dir);

std::string manifest_json(const AttentionDump& dump);
AttentionDump parse_manifest(std::string_view text);

}  // namespace attnfloat

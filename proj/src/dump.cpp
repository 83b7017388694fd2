// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/dump.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace attnfloat {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Paradigm p) { return p == Paradigm::ARM ? "ARM" : "MDM"; }

std::string_view to_string(TensorKind k) {
  switch (k) {
    case TensorKind::ATTN: return "ATTN";
    case TensorKind::Q: return "Q";
    case TensorKind::K: return "K";
  }
  return "ATTN";
}

Paradigm parse_paradigm(std::string_view s) {
  if (s == "ARM") return Paradigm::ARM;
  if (s == "MDM") return Paradigm::MDM;
  throw Error(ErrorKind::MalformedManifest, "unknown paradigm '" + std::string(s) + "'");
}

TensorKind parse_tensor_kind(std::string_view s) {
  if (s == "ATTN") return TensorKind::ATTN;
  if (s == "Q") return TensorKind::Q;
  if (s == "K") return TensorKind::K;
  throw Error(ErrorKind::MalformedManifest, "unknown tensor kind '" + std::string(s) + "'");
}

std::size_t TensorRecord::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

const TensorRecord* AttentionDump::find(TensorKind kind, std::size_t layer, std::size_t step) const {
  auto it = tensors.find(TensorKey{kind, layer, step});
  return it == tensors.end() ? nullptr : &it->second;
}

bool AttentionDump::has_attention(std::size_t layer, std::size_t step) const {
  return find(TensorKind::ATTN, layer, step) != nullptr;
}

bool AttentionDump::has_qk(std::size_t layer, std::size_t step) const {
  return find(TensorKind::Q, layer, step) != nullptr && find(TensorKind::K, layer, step) != nullptr;
}

const RegionAnnotation* AttentionDump::region(std::string_view label) const {
  for (const auto& r : regions)
    if (r.label == label) return &r;
  return nullptr;
}

void AttentionDump::put(TensorRecord record) {
  record.file = tensor_file_name(record.kind, record.layer, record.step);
  TensorKey key{record.kind, record.layer, record.step};
  tensors.insert_or_assign(key, std::move(record));
}

std::string tensor_file_name(TensorKind kind, std::size_t layer, std::size_t step) {
  return std::string(to_string(kind)) + "_l" + std::to_string(layer) + "_s" + std::to_string(step) + ".bin";
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

const ValidationEntry* ValidationReport::first_failure() const {
  for (const auto& e : entries)
    if (!e.passed) return &e;
  return nullptr;
}

const ValidationEntry* ValidationReport::find(std::string_view check) const {
  for (const auto& e : entries)
    if (e.check == check) return &e;
  return nullptr;
}

namespace {

ValidationEntry pass(std::string check, std::string detail = {}, double deviation = 0.0) {
  return {std::move(check), true, deviation, std::move(detail), ErrorKind::InvalidAnnotation};
}

ValidationEntry fail(std::string check, ErrorKind kind, std::string detail, double deviation = 0.0) {
  return {std::move(check), false, deviation, std::move(detail), kind};
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

std::string tensor_name(const TensorRecord& t) {
  return std::string(to_string(t.kind)) + " layer " + std::to_string(t.layer) + " step " +
         std::to_string(t.step);
}

bool header_ok(const AttentionDump& d) {
  return d.num_layers > 0 && d.num_heads > 0 && d.head_dim > 0 && d.seq_len > 0 && d.num_steps > 0;
}

ValidationEntry check_header(const AttentionDump& d) {
  if (!header_ok(d))
    return fail("header", ErrorKind::MalformedManifest,
                "num_layers, num_heads, head_dim, seq_len and num_steps must all be positive");
  if (d.paradigm == Paradigm::ARM && d.num_steps != 1)
    return fail("header", ErrorKind::MalformedManifest,
                "ARM dumps must have num_steps = 1, got " + std::to_string(d.num_steps));
  return pass("header");
}

ValidationEntry check_tokens(const AttentionDump& d) {
  if (d.tokens.size() != d.seq_len)
    return fail("tokens", ErrorKind::MalformedManifest,
                "expected " + std::to_string(d.seq_len) + " tokens, found " + std::to_string(d.tokens.size()));
  for (std::size_t i = 0; i < d.tokens.size(); ++i)
    if (d.tokens[i].position != static_cast<std::int64_t>(i))
      return fail("tokens", ErrorKind::MalformedManifest,
                  "token " + std::to_string(i) + " has position " + std::to_string(d.tokens[i].position));
  return pass("tokens");
}

ValidationEntry check_tensor_index(const AttentionDump& d) {
  for (const auto& [key, t] : d.tensors) {
    if (key.kind != t.kind || key.layer != t.layer || key.step != t.step)
      return fail("tensor_index", ErrorKind::MalformedManifest, "tensor key does not match record " + tensor_name(t));
    if (t.layer >= d.num_layers || t.step >= d.num_steps)
      return fail("tensor_index", ErrorKind::MalformedManifest, tensor_name(t) + " is outside the declared L x T grid");
  }
  return pass("tensor_index");
}

ValidationEntry check_coverage(const AttentionDump& d) {
  if (!header_ok(d)) return fail("coverage", ErrorKind::MissingTensor, "header invalid");
  for (std::size_t l = 0; l < d.num_layers; ++l) {
    for (std::size_t t = 0; t < d.num_steps; ++t) {
      const bool q = d.find(TensorKind::Q, l, t) != nullptr;
      const bool k = d.find(TensorKind::K, l, t) != nullptr;
      const std::string where = "layer " + std::to_string(l) + " step " + std::to_string(t);
      if (q != k)
        return fail("coverage", ErrorKind::MissingTensor, where + " has " + (q ? "Q without K" : "K without Q"));
      if (!d.has_attention(l, t) && !q)
        return fail("coverage", ErrorKind::MissingTensor, where + " has neither ATTN nor Q/K");
    }
  }
  return pass("coverage");
}

bool shape_ok(const AttentionDump& d, const TensorRecord& t) {
  const std::size_t last = t.kind == TensorKind::ATTN ? d.seq_len : d.head_dim;
  return t.shape == std::vector<std::size_t>{d.num_heads, d.seq_len, last} && t.data.size() == t.element_count();
}

ValidationEntry check_shapes(const AttentionDump& d) {
  for (const auto& [key, t] : d.tensors) {
    if (shape_ok(d, t)) continue;
    const std::size_t last = t.kind == TensorKind::ATTN ? d.seq_len : d.head_dim;
    std::vector<std::size_t> expected{d.num_heads, d.seq_len, last};
    std::string detail = tensor_name(t) + " has shape " + shape_string(t.shape) + ", expected " + shape_string(expected);
    if (t.data.size() != t.element_count())
      detail = tensor_name(t) + " payload holds " + std::to_string(t.data.size()) + " floats, shape needs " +
               std::to_string(t.element_count());
    return fail("shapes", ErrorKind::ShapeMismatch, detail);
  }
  return pass("shapes");
}

ValidationEntry check_row_stochastic(const AttentionDump& d) {
  double worst = 0.0;
  std::string worst_where;
  bool negative = false;
  for (const auto& [key, t] : d.tensors) {
    if (t.kind != TensorKind::ATTN || !shape_ok(d, t)) continue;
    const std::size_t n = d.seq_len;
    for (std::size_t h = 0; h < d.num_heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        const float* row = t.data.data() + (h * n + i) * n;
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double v = row[j];
          if (!std::isfinite(v) || v < 0.0) {
            if (!negative) {
              worst_where = tensor_name(t) + " head " + std::to_string(h) + " row " + std::to_string(i) +
                            " has entry " + std::to_string(v) + " at column " + std::to_string(j);
            }
            negative = true;
          }
          sum += v;
        }
        const double dev = std::isfinite(sum) ? std::abs(sum - 1.0) : std::numeric_limits<double>::infinity();
        if (dev > worst) {
          worst = dev;
          if (!negative)
            worst_where = tensor_name(t) + " head " + std::to_string(h) + " row " + std::to_string(i) +
                          " sums to " + std::to_string(sum);
        }
      }
    }
  }
  if (negative) return fail("row_stochastic", ErrorKind::NotRowStochastic, worst_where, worst);
  if (worst > kRowSumTolerance)
    return fail("row_stochastic", ErrorKind::NotRowStochastic,
                "worst row: " + worst_where + " (deviation " + std::to_string(worst) + ")", worst);
  return pass("row_stochastic", {}, worst);
}

ValidationEntry check_causality(const AttentionDump& d) {
  if (d.paradigm != Paradigm::ARM) return pass("causality", "not applicable to MDM dumps");
  double worst = 0.0;
  std::string where;
  for (const auto& [key, t] : d.tensors) {
    if (t.kind != TensorKind::ATTN || !shape_ok(d, t)) continue;
    const std::size_t n = d.seq_len;
    for (std::size_t h = 0; h < d.num_heads; ++h)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double v = std::abs(static_cast<double>(t.data[(h * n + i) * n + j]));
          if (v > worst) {
            worst = v;
            where = tensor_name(t) + " A[" + std::to_string(h) + "," + std::to_string(i) + "," + std::to_string(j) +
                    "] = " + std::to_string(v);
          }
        }
  }
  if (worst > kCausalTolerance) return fail("causality", ErrorKind::CausalityViolation, where, worst);
  return pass("causality", {}, worst);
}

ValidationEntry check_regions(const AttentionDump& d) {
  std::set<std::string> labels;
  for (const auto& r : d.regions) {
    if (r.span.empty()) return fail("regions", ErrorKind::InvalidAnnotation, "region " + r.label + " is empty");
    if (r.span.end > d.seq_len)
      return fail("regions", ErrorKind::InvalidAnnotation, "region " + r.label + " extends past seq_len");
    if (!labels.insert(r.label).second)
      return fail("regions", ErrorKind::InvalidAnnotation, "duplicate region label " + r.label);
  }
  for (std::size_t a = 0; a < d.regions.size(); ++a) {
    for (std::size_t b = a + 1; b < d.regions.size(); ++b) {
      const auto& ra = d.regions[a];
      const auto& rb = d.regions[b];
      if (ra.span.start < rb.span.end && rb.span.start < ra.span.end)
        return fail("regions", ErrorKind::InvalidAnnotation, "regions " + ra.label + " and " + rb.label + " overlap");
    }
  }
  for (std::size_t a = 1; a < d.regions.size(); ++a)
    if (d.regions[a].span.start < d.regions[a - 1].span.start)
      return fail("regions", ErrorKind::InvalidAnnotation,
                  "regions " + d.regions[a - 1].label + " and " + d.regions[a].label + " are out of order");
  return pass("regions");
}

ValidationEntry check_needle(const AttentionDump& d) {
  if (!d.needle) return pass("needle", "absent");
  const auto& nd = *d.needle;
  if (nd.needle_span.empty() || nd.needle_span.end > d.seq_len)
    return fail("needle", ErrorKind::InvalidAnnotation, "needle span must be non-empty and inside [0, seq_len)");
  for (const auto& e : nd.decode_events) {
    if (e.step >= d.num_steps || e.position >= d.seq_len)
      return fail("needle", ErrorKind::InvalidAnnotation,
                  "decode event (" + std::to_string(e.step) + ", " + std::to_string(e.position) + ") out of range");
  }
  return pass("needle");
}

ValidationEntry check_step_traces(const AttentionDump& d) {
  if (d.step_traces.empty()) return pass("step_traces", "absent");
  if (d.paradigm == Paradigm::ARM)
    return fail("step_traces", ErrorKind::InvalidAnnotation, "ARM dumps carry no step traces");
  if (d.step_traces.size() != d.num_steps)
    return fail("step_traces", ErrorKind::InvalidAnnotation,
                "expected " + std::to_string(d.num_steps) + " step traces, found " +
                    std::to_string(d.step_traces.size()));
  for (std::size_t t = 0; t < d.step_traces.size(); ++t) {
    const auto& tr = d.step_traces[t];
    if (tr.step != t)
      return fail("step_traces", ErrorKind::InvalidAnnotation, "step trace " + std::to_string(t) + " is out of order");
    for (auto p : tr.masked_positions)
      if (p >= d.seq_len)
        return fail("step_traces", ErrorKind::InvalidAnnotation, "masked position out of range at step " + std::to_string(t));
    if (!std::includes(tr.masked_positions.begin(), tr.masked_positions.end(), tr.newly_decoded.begin(),
                       tr.newly_decoded.end()))
      return fail("step_traces", ErrorKind::InvalidAnnotation,
                  "step " + std::to_string(t) + " decodes a position that was not masked");
    if (t + 1 < d.step_traces.size()) {
      std::set<std::size_t> expected;
      std::set_difference(tr.masked_positions.begin(), tr.masked_positions.end(), tr.newly_decoded.begin(),
                          tr.newly_decoded.end(), std::inserter(expected, expected.end()));
      if (expected != d.step_traces[t + 1].masked_positions)
        return fail("step_traces", ErrorKind::InvalidAnnotation,
                    "masked set at step " + std::to_string(t + 1) + " != masked(t) minus newly_decoded(t)");
    }
  }
  if (const auto* answer = d.region("Answer")) {
    const auto& masked0 = d.step_traces.front().masked_positions;
    for (std::size_t p = answer->span.start; p < answer->span.end; ++p)
      if (!masked0.count(p))
        return fail("step_traces", ErrorKind::InvalidAnnotation,
                    "Answer position " + std::to_string(p) + " is not masked at step 0");
  }
  return pass("step_traces");
}

}  // namespace

ValidationReport validate_dump(const AttentionDump& dump) noexcept {
  ValidationReport report;
  try {
    report.entries.push_back(check_header(dump));
    report.entries.push_back(check_tokens(dump));
    report.entries.push_back(check_tensor_index(dump));
    report.entries.push_back(check_coverage(dump));
    report.entries.push_back(check_shapes(dump));
    report.entries.push_back(check_row_stochastic(dump));
    report.entries.push_back(check_causality(dump));
    report.entries.push_back(check_regions(dump));
    report.entries.push_back(check_needle(dump));
    report.entries.push_back(check_step_traces(dump));

    bool qk_everywhere = header_ok(dump);
    for (std::size_t l = 0; qk_everywhere && l < dump.num_layers; ++l)
      for (std::size_t t = 0; qk_everywhere && t < dump.num_steps; ++t) qk_everywhere = dump.has_qk(l, t);
    if (!qk_everywhere) report.notes.emplace_back("qk-geometry unavailable");
    if (!dump.needle || dump.needle->decode_events.empty()) report.notes.emplace_back("retrieval-heads unavailable");
    if (dump.regions.empty()) report.notes.emplace_back("region flow unavailable");
  } catch (const std::exception& e) {
    report.entries.push_back(fail("internal", ErrorKind::InvalidArgument, e.what()));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

template <typename T>
T get_field(const ordered_json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorKind::MalformedManifest, std::string("missing key '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedManifest, std::string("bad value for '") + key + "': " + e.what());
  }
}

bool has_value(const ordered_json& obj, const char* key) {
  return obj.contains(key) && !obj.at(key).is_null();
}

const ordered_json& get_array(const ordered_json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_array())
    throw Error(ErrorKind::MalformedManifest, std::string("'") + key + "' must be an array");
  return obj.at(key);
}

std::set<std::size_t> position_set(const ordered_json& arr, const char* key) {
  std::set<std::size_t> out;
  for (const auto& v : get_array(arr, key)) {
    if (!v.is_number_unsigned()) throw Error(ErrorKind::MalformedManifest, std::string(key) + " entries must be positions");
    out.insert(v.get<std::size_t>());
  }
  return out;
}

}  // namespace

std::string manifest_json(const AttentionDump& dump) {
  ordered_json m;
  m["model_id"] = dump.model_id;
  m["paradigm"] = to_string(dump.paradigm);
  m["num_layers"] = dump.num_layers;
  m["num_heads"] = dump.num_heads;
  m["head_dim"] = dump.head_dim;
  m["seq_len"] = dump.seq_len;
  m["num_steps"] = dump.num_steps;

  m["tokens"] = ordered_json::array();
  for (const auto& t : dump.tokens) {
    ordered_json tok;
    tok["position"] = t.position;
    tok["token_id"] = t.token_id;
    tok["token_text"] = t.token_text;
    tok["is_special"] = t.is_special;
    m["tokens"].push_back(std::move(tok));
  }

  m["regions"] = ordered_json::array();
  for (const auto& r : dump.regions) {
    ordered_json reg;
    reg["label"] = r.label;
    reg["start"] = r.span.start;
    reg["end"] = r.span.end;
    m["regions"].push_back(std::move(reg));
  }

  if (dump.needle) {
    ordered_json nd;
    nd["start"] = dump.needle->needle_span.start;
    nd["end"] = dump.needle->needle_span.end;
    nd["decode_events"] = ordered_json::array();
    for (const auto& e : dump.needle->decode_events) nd["decode_events"].push_back({e.step, e.position});
    m["needle"] = std::move(nd);
  } else {
    m["needle"] = nullptr;
  }

  m["step_traces"] = ordered_json::array();
  for (const auto& tr : dump.step_traces) {
    ordered_json st;
    st["step"] = tr.step;
    st["masked"] = tr.masked_positions;
    st["newly_decoded"] = tr.newly_decoded;
    m["step_traces"].push_back(std::move(st));
  }

  m["tensors"] = ordered_json::array();
  for (const auto& [key, t] : dump.tensors) {
    ordered_json rec;
    rec["kind"] = to_string(t.kind);
    rec["layer"] = t.layer;
    rec["step"] = t.step;
    rec["shape"] = t.shape;
    rec["file"] = t.file.empty() ? tensor_file_name(t.kind, t.layer, t.step) : t.file;
    m["tensors"].push_back(std::move(rec));
  }
  return m.dump(2) + "\n";
}

AttentionDump parse_manifest(std::string_view text) {
  ordered_json m;
  try {
    m = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::MalformedManifest, std::string("manifest.json is not valid JSON: ") + e.what());
  }
  if (!m.is_object()) throw Error(ErrorKind::MalformedManifest, "manifest root must be an object");

  AttentionDump d;
  d.model_id = get_field<std::string>(m, "model_id");
  d.paradigm = parse_paradigm(get_field<std::string>(m, "paradigm"));
  d.num_layers = get_field<std::size_t>(m, "num_layers");
  d.num_heads = get_field<std::size_t>(m, "num_heads");
  d.head_dim = get_field<std::size_t>(m, "head_dim");
  d.seq_len = get_field<std::size_t>(m, "seq_len");
  d.num_steps = get_field<std::size_t>(m, "num_steps");

  for (const auto& tok : get_array(m, "tokens")) {
    TokenRecord t;
    t.position = get_field<std::int64_t>(tok, "position");
    t.token_id = get_field<std::int64_t>(tok, "token_id");
    t.token_text = get_field<std::string>(tok, "token_text");
    t.is_special = get_field<bool>(tok, "is_special");
    d.tokens.push_back(std::move(t));
  }

  if (has_value(m, "regions")) {
    for (const auto& reg : get_array(m, "regions")) {
      d.regions.push_back(RegionAnnotation{get_field<std::string>(reg, "label"),
                                           Span{get_field<std::size_t>(reg, "start"), get_field<std::size_t>(reg, "end")}});
    }
  }

  if (has_value(m, "needle")) {
    const auto& nd = m.at("needle");
    NeedleAnnotation needle;
    needle.needle_span = Span{get_field<std::size_t>(nd, "start"), get_field<std::size_t>(nd, "end")};
    if (has_value(nd, "decode_events")) {
      for (const auto& ev : get_array(nd, "decode_events")) {
        if (!ev.is_array() || ev.size() != 2 || !ev[0].is_number_unsigned() || !ev[1].is_number_unsigned())
          throw Error(ErrorKind::MalformedManifest, "decode_events entries must be [step, pos] pairs");
        needle.decode_events.push_back(DecodeEvent{ev[0].get<std::size_t>(), ev[1].get<std::size_t>()});
      }
    }
    d.needle = std::move(needle);
  }

  if (has_value(m, "step_traces")) {
    for (const auto& st : get_array(m, "step_traces")) {
      StepTrace tr;
      tr.step = get_field<std::size_t>(st, "step");
      tr.masked_positions = position_set(st, "masked");
      tr.newly_decoded = position_set(st, "newly_decoded");
      d.step_traces.push_back(std::move(tr));
    }
  }

  for (const auto& rec : get_array(m, "tensors")) {
    TensorRecord t;
    t.kind = parse_tensor_kind(get_field<std::string>(rec, "kind"));
    t.layer = get_field<std::size_t>(rec, "layer");
    t.step = get_field<std::size_t>(rec, "step");
    t.shape = get_field<std::vector<std::size_t>>(rec, "shape");
    t.file = get_field<std::string>(rec, "file");
    if (t.file.empty() || t.file.find("..") != std::string::npos || t.file.find('/') != std::string::npos)
      throw Error(ErrorKind::MalformedManifest, "tensor file name '" + t.file + "' must be a plain file name");
    TensorKey key{t.kind, t.layer, t.step};
    if (d.tensors.count(key))
      throw Error(ErrorKind::MalformedManifest, "duplicate tensor record " + tensor_name(t));
    d.tensors.emplace(key, std::move(t));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Payload I/O

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::vector<float> read_payload(const fs::path& path, std::size_t expected, const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MissingTensor, "tensor file " + path.string() + " for " + name + " not found");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != expected * sizeof(float))
    throw Error(ErrorKind::ShapeMismatch, name + ": file holds " + std::to_string(bytes.size()) +
                                              " bytes, shape needs " + std::to_string(expected * sizeof(float)));
  std::vector<float> data(expected);
  std::memcpy(data.data(), bytes.data(), bytes.size());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& f : data) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
  return data;
}

void write_payload(const fs::path& path, const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::MissingInput, "cannot open " + path.string() + " for writing");
  if constexpr (std::endian::native == std::endian::big) {
    std::vector<std::uint32_t> swapped(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) swapped[i] = byteswap32(std::bit_cast<std::uint32_t>(data[i]));
    out.write(reinterpret_cast<const char*>(swapped.data()), static_cast<std::streamsize>(swapped.size() * 4));
  } else {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorKind::MissingInput, "failed writing " + path.string());
}

}  // namespace

AttentionDump read_dump_unchecked(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::MissingInput, "no manifest.json in " + dir.string());
  std::stringstream buf;
  buf << in.rdbuf();
  AttentionDump d = parse_manifest(buf.str());
  for (auto& [key, t] : d.tensors) t.data = read_payload(dir / t.file, t.element_count(), tensor_name(t));
  return d;
}

AttentionDump read_dump(const fs::path& dir) {
  AttentionDump d = read_dump_unchecked(dir);
  const ValidationReport report = validate_dump(d);
  if (const auto* failure = report.first_failure())
    throw Error(failure->failure_kind, failure->check + ": " + failure->detail);
  return d;
}

void write_dump(const AttentionDump& dump, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::MissingInput, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::MissingInput, "cannot write manifest in " + dir.string());
    out << manifest_json(dump);
  }
  for (const auto& [key, t] : dump.tensors) {
    const std::string file = t.file.empty() ? tensor_file_name(t.kind, t.layer, t.step) : t.file;
    write_payload(dir / file, t.data);
  }
}

}  // namespace attnfloat

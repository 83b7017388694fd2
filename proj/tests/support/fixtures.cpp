// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include "attnfloat/attn_stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <unistd.h>

namespace attnfloat::testing {

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double normal(Rng& rng) {
  const double u1 = std::max(uniform(rng), 1e-300);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

AttentionDump empty_dump(Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                         std::size_t steps, std::size_t head_dim) {
  AttentionDump d;
  d.model_id = paradigm == Paradigm::ARM ? "toy-arm" : "toy-mdm";
  d.paradigm = paradigm;
  d.num_layers = layers;
  d.num_heads = heads;
  d.head_dim = head_dim;
  d.seq_len = seq_len;
  d.num_steps = steps;
  for (std::size_t i = 0; i < seq_len; ++i)
    d.tokens.push_back(TokenRecord{static_cast<std::int64_t>(i), static_cast<std::int64_t>(100 + i),
                                   "t" + std::to_string(i), false});
  return d;
}

namespace {

TensorRecord pack(TensorKind kind, std::size_t layer, std::size_t step, const std::vector<Matrix>& heads) {
  TensorRecord t;
  t.kind = kind;
  t.layer = layer;
  t.step = step;
  const auto rows = static_cast<std::size_t>(heads.front().rows());
  const auto cols = static_cast<std::size_t>(heads.front().cols());
  t.shape = {heads.size(), rows, cols};
  t.data.reserve(heads.size() * rows * cols);
  for (const auto& h : heads)
    for (Eigen::Index i = 0; i < h.size(); ++i) t.data.push_back(static_cast<float>(h.data()[i]));
  return t;
}

}  // namespace

void set_attention(AttentionDump& dump, std::size_t layer, std::size_t step, const std::vector<Matrix>& heads) {
  dump.put(pack(TensorKind::ATTN, layer, step, heads));
}

void set_qk(AttentionDump& dump, std::size_t layer, std::size_t step, const std::vector<Matrix>& q,
            const std::vector<Matrix>& k) {
  dump.put(pack(TensorKind::Q, layer, step, q));
  dump.put(pack(TensorKind::K, layer, step, k));
}

Matrix rows_equal(const std::vector<double>& profile) {
  const auto n = static_cast<Eigen::Index>(profile.size());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = profile[static_cast<std::size_t>(j)];
  return m;
}

Matrix uniform_matrix(std::size_t n) {
  return Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n));
}

Matrix random_stochastic(Rng& rng, std::size_t n, bool causal) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::Index limit = causal ? i + 1 : m.cols();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < limit; ++j) {
      m(i, j) = -std::log(std::max(uniform(rng), 1e-12));
      sum += m(i, j);
    }
    for (Eigen::Index j = 0; j < limit; ++j) m(i, j) /= sum;
  }
  return m;
}

std::vector<double> random_profile(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double sum = 0.0;
  // Skewed draws so that dominant positions actually appear.
  for (auto& v : p) {
    v = std::pow(uniform(rng), 4.0);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

AttentionDump profile_dump(const std::vector<std::vector<double>>& per_layer_profiles) {
  const std::size_t n = per_layer_profiles.front().size();
  AttentionDump d = empty_dump(Paradigm::MDM, per_layer_profiles.size(), 1, n);
  for (std::size_t l = 0; l < per_layer_profiles.size(); ++l) set_attention(d, l, 0, {rows_equal(per_layer_profiles[l])});
  return d;
}

AttentionDump random_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                          std::size_t steps) {
  AttentionDump d = empty_dump(paradigm, layers, heads, seq_len, steps);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Matrix> hs;
      for (std::size_t h = 0; h < heads; ++h) hs.push_back(random_stochastic(rng, seq_len, paradigm == Paradigm::ARM));
      set_attention(d, l, t, hs);
    }
  return d;
}

namespace {

Matrix random_gaussian(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

AttentionDump random_qk_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                             std::size_t steps, std::size_t head_dim) {
  AttentionDump d = empty_dump(paradigm, layers, heads, seq_len, steps, head_dim);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Matrix> q, k;
      for (std::size_t h = 0; h < heads; ++h) {
        q.push_back(random_gaussian(rng, seq_len, head_dim));
        k.push_back(random_gaussian(rng, seq_len, head_dim));
      }
      set_qk(d, l, t, q, k);
    }
  return d;
}

AttentionDump random_annotated_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads,
                                    std::size_t seq_len, std::size_t steps, std::size_t head_dim) {
  if (paradigm == Paradigm::ARM) steps = 1;
  AttentionDump d = random_dump(rng, paradigm, layers, heads, seq_len, steps);
  d.head_dim = head_dim;
  d.model_id = "random-" + std::to_string(rng() % 1000);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Matrix> q, k;
      for (std::size_t h = 0; h < heads; ++h) {
        q.push_back(random_gaussian(rng, seq_len, head_dim));
        k.push_back(random_gaussian(rng, seq_len, head_dim));
      }
      if (rng() % 2) set_qk(d, l, t, q, k);
    }
  d.tokens[0].token_text = "<|endoftext|>";
  d.tokens[0].is_special = true;
  if (seq_len > 2) d.tokens[1].token_text = "\n\t\"quoted\" ✓";

  // BOS | Query | Answer, answer occupying the tail.
  const std::size_t answer_start = seq_len - std::max<std::size_t>(1, seq_len / 4);
  d.regions.push_back({"BOS", {0, 1}});
  if (answer_start > 1) d.regions.push_back({"Query", {1, answer_start}});
  d.regions.push_back({"Answer", {answer_start, seq_len}});

  NeedleAnnotation needle;
  needle.needle_span = {std::min<std::size_t>(1, seq_len - 1), std::min<std::size_t>(answer_start, seq_len)};
  if (needle.needle_span.empty()) needle.needle_span = {0, 1};
  for (std::size_t p = answer_start; p < seq_len; ++p) needle.decode_events.push_back({rng() % steps, p});
  d.needle = needle;

  if (paradigm == Paradigm::MDM) {
    std::set<std::size_t> masked;
    for (std::size_t p = answer_start; p < seq_len; ++p) masked.insert(p);
    for (std::size_t t = 0; t < steps; ++t) {
      StepTrace tr;
      tr.step = t;
      tr.masked_positions = masked;
      for (auto p : masked)
        if (t + 1 == steps || rng() % 2) tr.newly_decoded.insert(p);
      for (auto p : tr.newly_decoded) masked.erase(p);
      d.step_traces.push_back(std::move(tr));
    }
  }
  return d;
}

AttentionDump drift_fixture() {
  constexpr std::size_t n = 64, T = 40;
  AttentionDump d = empty_dump(Paradigm::MDM, 1, 2, n, T);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t col = t < 14 ? 17 : (t < 26 ? 34 : 46);
    std::vector<double> profile(n, 0.5 / static_cast<double>(n - 1));
    profile[col] = 0.5;
    const Matrix a = rows_equal(profile);
    set_attention(d, 0, t, {a, a});
  }
  return d;
}

AttentionDump gold_shift_fixture(Paradigm paradigm, std::size_t gold, std::size_t layers) {
  constexpr std::size_t n = 25;
  AttentionDump d = empty_dump(paradigm, layers, 1, n);
  d.regions.push_back({"BOS", {0, 1}});
  d.regions.push_back({"Query", {1, 3}});
  for (std::size_t k = 1; k <= 10; ++k) d.regions.push_back({"Doc" + std::to_string(k), {3 + 2 * (k - 1), 5 + 2 * (k - 1)}});
  d.regions.push_back({"Answer", {23, 25}});
  d.tokens[0].token_text = "<s>";
  d.tokens[0].is_special = true;
  const Span gold_span = d.regions[1 + gold].span;
  d.needle = NeedleAnnotation{gold_span, {{0, 23}, {0, 24}}};

  Matrix a = Matrix::Zero(n, n);
  if (paradigm == Paradigm::MDM) {
    a = uniform_matrix(n);
    for (Eigen::Index i = 23; i < 25; ++i) {
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) a(i, j) = 0.2 / (n - 2);
      for (auto j = gold_span.start; j < gold_span.end; ++j) a(i, static_cast<Eigen::Index>(j)) = 0.4;
      a.row(i) /= a.row(i).sum();
    }
  } else {
    a(0, 0) = 1.0;
    for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
      a(i, 0) = 0.9;
      for (Eigen::Index j = 1; j <= i; ++j) a(i, j) += 0.1 / static_cast<double>(i);
    }
  }
  for (std::size_t l = 0; l < layers; ++l) set_attention(d, l, 0, {a});
  return d;
}

AttentionDump depth_fixture() {
  constexpr std::size_t n = 8, dim = 4, layers = 24;
  AttentionDump d = empty_dump(Paradigm::MDM, layers, 1, n, 1, dim);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix q = Matrix::Zero(n, dim), k = Matrix::Zero(n, dim);
    // Queries: strong component along e0 plus a small per-row wobble.
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      q(i, 0) = 6.0;
      q(i, 1 + i % 3) = 0.5;
    }
    // Floating key: parallel to e0, norm rising from 2.2 through the shallow
    // layers, then 1.2 from layer 20 on.
    const double floating_norm = l < 20 ? 2.2 + 0.05 * static_cast<double>(l) : 1.2;
    k(0, 0) = floating_norm;
    // Other keys: norm 2, tilted 85 degrees away from e0.
    const double tilt = 85.0 * M_PI / 180.0;
    for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(n); ++j) {
      k(j, 0) = 2.0 * std::cos(tilt);
      k(j, 1 + j % 3) = 2.0 * std::sin(tilt);
    }
    set_qk(d, l, 0, {q}, {k});
  }
  return d;
}

const std::vector<TaxonomyEntry>& taxonomy_entries() {
  static const std::vector<TaxonomyEntry> entries{
      {"\n", false, 6109, "structural"},  {"<|endoftext|>", true, 2870, "structural"},
      {" ", false, 334, "structural"},    {"<|mdm_mask|>", true, 213, "structural"},
      {",", false, 123, "structural"},    {".", false, 87, "structural"},
      {")", false, 53, "structural"},     {"?", false, 38, "structural"},
      {"the", false, 24, "lexical"},
  };
  return entries;
}

std::vector<AttentionDump> taxonomy_fixture() {
  std::vector<AttentionDump> dumps;
  const Matrix a = rows_equal({0.7, 0.1, 0.1, 0.1});
  for (const auto& e : taxonomy_entries()) {
    AttentionDump d = empty_dump(Paradigm::MDM, 1, 1, 4, e.count);
    d.tokens[0].token_text = e.text;
    d.tokens[0].is_special = e.is_special;
    for (std::size_t t = 0; t < e.count; ++t) set_attention(d, 0, t, {a});
    dumps.push_back(std::move(d));
  }
  return dumps;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("attnfloat_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace attnfloat::testing

namespace attnfloat::testing {

namespace {

TensorRecord& first_attention(AttentionDump& d) { return d.tensors.at(TensorKey{TensorKind::ATTN, 0, 0}); }

void rewrite_file(const std::filesystem::path& p, const std::function<void(std::string&)>& edit) {
  std::ifstream in(p, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  edit(text);
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

void replace_once(std::string& text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::runtime_error("fixture edit: '" + from + "' not found");
  text.replace(pos, from.size(), to);
}

}  // namespace

AttentionDump corrupt_base(Paradigm paradigm) {
  Rng rng(paradigm == Paradigm::ARM ? 11 : 7);
  return random_annotated_dump(rng, paradigm, 2, 2, 6, paradigm == Paradigm::ARM ? 1 : 3, 4);
}

const std::vector<CorruptCase>& corrupt_cases() {
  using P = std::filesystem::path;
  static const std::vector<CorruptCase> cases{
      {"zero layers", "header", ErrorKind::MalformedManifest, Paradigm::MDM,
       [](AttentionDump& d) {
         d.num_layers = 0;
         d.tensors.clear();
       },
       {}},
      {"ARM with several steps", "header", ErrorKind::MalformedManifest, Paradigm::ARM,
       [](AttentionDump& d) { d.num_steps = 2; }, {}},
      {"token count mismatch", "tokens", ErrorKind::MalformedManifest, Paradigm::MDM,
       [](AttentionDump& d) { d.tokens.pop_back(); }, {}},
      {"non-contiguous token positions", "tokens", ErrorKind::MalformedManifest, Paradigm::MDM,
       [](AttentionDump& d) { d.tokens[2].position = 7; }, {}},
      {"tensor outside grid", "tensor_index", ErrorKind::MalformedManifest, Paradigm::MDM,
       [](AttentionDump& d) {
         TensorRecord extra = first_attention(d);
         extra.layer = d.num_layers;
         d.put(std::move(extra));
       },
       {}},
      {"layer gap", "coverage", ErrorKind::MissingTensor, Paradigm::MDM,
       [](AttentionDump& d) {
         d.tensors.erase(TensorKey{TensorKind::ATTN, 1, 0});
         d.tensors.erase(TensorKey{TensorKind::Q, 1, 0});
         d.tensors.erase(TensorKey{TensorKind::K, 1, 0});
       },
       {}},
      {"Q without K", "coverage", ErrorKind::MissingTensor, Paradigm::MDM,
       [](AttentionDump& d) {
         d.tensors.erase(TensorKey{TensorKind::ATTN, 0, 1});
         TensorRecord q;
         q.kind = TensorKind::Q;
         q.layer = 0;
         q.step = 1;
         q.shape = {d.num_heads, d.seq_len, d.head_dim};
         q.data.assign(q.element_count(), 0.5f);
         d.tensors.erase(TensorKey{TensorKind::K, 0, 1});
         d.put(std::move(q));
       },
       {}},
      {"wrong tensor shape", "shapes", ErrorKind::ShapeMismatch, Paradigm::MDM,
       [](AttentionDump& d) {
         auto& t = first_attention(d);
         t.shape = {d.num_heads, d.seq_len / 2, d.seq_len * 2};
       },
       {}},
      {"row summing to 0.8", "row_stochastic", ErrorKind::NotRowStochastic, Paradigm::MDM,
       [](AttentionDump& d) {
         auto& t = first_attention(d);
         const std::size_t n = d.seq_len;
         for (std::size_t j = 0; j < n; ++j) t.data[3 * n + j] = 0.8f / static_cast<float>(n);
       },
       {}},
      {"negative entry", "row_stochastic", ErrorKind::NotRowStochastic, Paradigm::MDM,
       [](AttentionDump& d) {
         auto& t = first_attention(d);
         // Row sum stays 1 so only the sign check can fire.
         t.data[1] += t.data[0] + 0.1f;
         t.data[0] = -0.1f;
       },
       {}},
      {"ARM entry above the diagonal", "causality", ErrorKind::CausalityViolation, Paradigm::ARM,
       [](AttentionDump& d) {
         auto& t = first_attention(d);
         const std::size_t n = d.seq_len;
         float* row = t.data.data() + n;  // row 1 of head 0
         row[0] = 0.4f;
         row[1] = 0.4f;
         row[3] = 0.2f;
       },
       {}},
      {"overlapping regions", "regions", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) {
         d.regions = {{"Query", {0, 3}}, {"Doc1", {2, 5}}};
       },
       {}},
      {"unsorted regions", "regions", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) {
         d.regions = {{"Doc1", {3, 5}}, {"Query", {0, 2}}};
       },
       {}},
      {"empty region", "regions", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.regions = {{"Query", {2, 2}}}; }, {}},
      {"region past seq_len", "regions", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.regions = {{"Query", {2, 9}}}; }, {}},
      {"duplicate region label", "regions", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.regions = {{"Doc", {0, 2}}, {"Doc", {3, 5}}}; }, {}},
      {"needle outside sequence", "needle", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.needle->needle_span = {4, 12}; }, {}},
      {"decode event past last step", "needle", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.needle->decode_events.push_back({d.num_steps, 5}); }, {}},
      {"step trace count", "step_traces", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.step_traces.pop_back(); }, {}},
      {"masked set not shrinking by decoded set", "step_traces", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.step_traces[1].masked_positions.insert(0); }, {}},
      {"decoding an unmasked position", "step_traces", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) { d.step_traces[0].newly_decoded.insert(0); }, {}},
      {"answer not masked at step 0", "step_traces", ErrorKind::InvalidAnnotation, Paradigm::MDM,
       [](AttentionDump& d) {
         for (auto& tr : d.step_traces) {
           tr.masked_positions.erase(d.seq_len - 1);
           tr.newly_decoded.erase(d.seq_len - 1);
         }
       },
       {}},
      {"missing manifest", "", ErrorKind::MissingInput, Paradigm::MDM, {},
       [](const P& dir) { std::filesystem::remove(dir / "manifest.json"); }},
      {"manifest is not JSON", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) { rewrite_file(dir / "manifest.json", [](std::string& s) { s.resize(s.size() / 2); }); }},
      {"manifest missing key", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) {
         rewrite_file(dir / "manifest.json", [](std::string& s) { replace_once(s, "\"head_dim\"", "\"headdim\""); });
       }},
      {"manifest wrong type", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) {
         rewrite_file(dir / "manifest.json", [](std::string& s) { replace_once(s, "\"paradigm\": \"MDM\"", "\"paradigm\": 3"); });
       }},
      {"unknown paradigm", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) {
         rewrite_file(dir / "manifest.json", [](std::string& s) { replace_once(s, "\"paradigm\": \"MDM\"", "\"paradigm\": \"RNN\""); });
       }},
      {"tensor file path escapes directory", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) {
         rewrite_file(dir / "manifest.json", [](std::string& s) { replace_once(s, "\"ATTN_l0_s0.bin\"", "\"../ATTN_l0_s0.bin\""); });
       }},
      {"duplicate tensor record", "", ErrorKind::MalformedManifest, Paradigm::MDM, {},
       [](const P& dir) {
         // The ATTN layer 0 step 1 record now claims step 0 as well.
         rewrite_file(dir / "manifest.json", [](std::string& s) {
           const auto file = s.find("\"file\": \"ATTN_l0_s1.bin\"");
           s.replace(s.rfind("\"step\": 1", file), 9, "\"step\": 0");
         });
       }},
      {"tensor file missing", "", ErrorKind::MissingTensor, Paradigm::MDM, {},
       [](const P& dir) { std::filesystem::remove(dir / "ATTN_l1_s2.bin"); }},
      {"truncated tensor file", "", ErrorKind::ShapeMismatch, Paradigm::MDM, {},
       [](const P& dir) { std::filesystem::resize_file(dir / "ATTN_l0_s0.bin", 20); }},
  };
  return cases;
}

}  // namespace attnfloat::testing

namespace attnfloat::testing {

AttentionDump cli_dump(Paradigm paradigm) {
  constexpr std::size_t layers = 3, heads = 2, n = 12, dim = 4;
  const std::size_t steps = paradigm == Paradigm::ARM ? 1 : 4;
  Rng rng(paradigm == Paradigm::ARM ? 2026 : 1026);
  AttentionDump d = random_qk_dump(rng, paradigm, layers, heads, n, steps, dim);
  d.model_id = paradigm == Paradigm::ARM ? "toy-arm" : "toy-mdm";
  // Position 0 becomes a sink: its key points along e0 and every query gets
  // a positive e0 component that grows with depth.
  for (auto& [key, t] : d.tensors) {
    for (std::size_t h = 0; h < heads; ++h) {
      float* block = t.data.data() + h * n * dim;
      if (key.kind == TensorKind::K) {
        std::fill(block, block + dim, 0.0f);
        block[0] = 3.0f;
      } else {
        for (std::size_t i = 0; i < n; ++i) block[i * dim] += 2.5f + static_cast<float>(key.layer);
      }
    }
  }

  const char* texts[n] = {"<s>", "Who", "?", "\n", "The", "cat", ".", "\n", "Paris", ",", "Paris", "<|mdm_mask|>"};
  for (std::size_t i = 0; i < n; ++i) {
    d.tokens[i].token_text = texts[i];
    d.tokens[i].is_special = i == 0 || i == 11;
  }
  d.regions = {{"BOS", {0, 1}}, {"Query", {1, 3}}, {"Doc1", {3, 7}}, {"Doc2", {7, 10}}, {"Answer", {10, 12}}};
  NeedleAnnotation needle;
  needle.needle_span = {8, 9};
  if (paradigm == Paradigm::ARM) {
    needle.decode_events = {{0, 10}, {0, 11}};
  } else {
    needle.decode_events = {{1, 10}, {3, 11}};
    std::set<std::size_t> masked{10, 11};
    for (std::size_t t = 0; t < steps; ++t) {
      StepTrace tr;
      tr.step = t;
      tr.masked_positions = masked;
      if (t == 1) tr.newly_decoded = {10};
      if (t == 3) tr.newly_decoded = {11};
      for (auto p : tr.newly_decoded) masked.erase(p);
      d.step_traces.push_back(std::move(tr));
    }
  }
  d.needle = needle;

  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t t = 0; t < steps; ++t) {
      std::vector<Matrix> hs;
      for (std::size_t h = 0; h < heads; ++h) hs.push_back(head_attention(d, l, t, h));
      set_attention(d, l, t, hs);
    }
  return d;
}

}  // namespace attnfloat::testing

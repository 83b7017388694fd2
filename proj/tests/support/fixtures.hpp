// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic dump builders shared by the unit, CLI and acceptance suites.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "attnfloat/dump.hpp"
#include "attnfloat/matrix.hpp"

namespace attnfloat::testing {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
double normal(Rng& rng);

/// Header, tokens (text "t{i}") and nothing else.
AttentionDump empty_dump(Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                         std::size_t steps = 1, std::size_t head_dim = 4);

/// Stores per-head matrices as the ATTN tensor at (layer, step).
void set_attention(AttentionDump& dump, std::size_t layer, std::size_t step, const std::vector<Matrix>& heads);

/// Stores Q and K tensors, each a list of per-head [n×d] matrices.
void set_qk(AttentionDump& dump, std::size_t layer, std::size_t step, const std::vector<Matrix>& q,
            const std::vector<Matrix>& k);

/// n×n matrix whose every row equals `profile` (so column means = profile).
Matrix rows_equal(const std::vector<double>& profile);

Matrix uniform_matrix(std::size_t n);

/// Random row-stochastic matrix; causal zeroes the strict upper triangle.
Matrix random_stochastic(Rng& rng, std::size_t n, bool causal = false);

/// Random Dirichlet-like profile summing to one.
std::vector<double> random_profile(Rng& rng, std::size_t n);

/// Single-layer, single-head, T=1 bidirectional dump whose received profile
/// is exactly `profile` (up to float32 storage).
AttentionDump profile_dump(const std::vector<std::vector<double>>& per_layer_profiles);

AttentionDump random_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                          std::size_t steps);

/// Dump with Q/K only (no ATTN), random Gaussian entries.
AttentionDump random_qk_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads, std::size_t seq_len,
                             std::size_t steps, std::size_t head_dim);

/// Fully annotated random dump (regions, needle, step traces, Q/K + ATTN).
AttentionDump random_annotated_dump(Rng& rng, Paradigm paradigm, std::size_t layers, std::size_t heads,
                                    std::size_t seq_len, std::size_t steps, std::size_t head_dim);

/// Annotated dump (L=3, m=2, n=12, d=4; MDM T=4) whose ATTN tensors are the
/// masked softmax of its stored Q/K, so both code paths see the same maps.
/// Regions BOS | Query | Doc1 | Doc2 | Answer, needle inside Doc2.
AttentionDump cli_dump(Paradigm paradigm);

/// MDM dump, one layer, n=64, T=40; the dominant column sits at 17 for
/// t < 14, 34 for 14 <= t < 26 and 46 afterwards.
AttentionDump drift_fixture();
inline const std::vector<std::size_t> kDriftBandStarts{0, 14, 26};

/// Region layout BOS | Query | Doc1..Doc10 | Answer (n = 25) with the
/// needle inside Doc{gold}. MDM: Answer rows lean on the gold doc. ARM:
/// causal rows put 0.9 on BOS.
AttentionDump gold_shift_fixture(Paradigm paradigm, std::size_t gold, std::size_t layers = 4);

/// Q/K dump, n=8, d=4, one head, 24 layers, floating key column 0. Its norm
/// exceeds the others by a growing margin before layer 20 and falls below
/// them from layer 20 on, while its direction stays aligned with every query.
AttentionDump depth_fixture();

/// Token counts matching the floating-token frequency table: "\n" 6109,
/// "<|endoftext|>" 2870, " " 334, "<|mdm_mask|>" 213, "," 123, "." 87,
/// ")" 53, "?" 38, "the" 24.
struct TaxonomyEntry {
  std::string text;
  bool is_special;
  std::size_t count;
  const char* label;  // "structural" / "lexical"
};
const std::vector<TaxonomyEntry>& taxonomy_entries();

/// One dump per entry; the token sits at position 0 and is dominant at each
/// of `count` denoising steps under epsilon 0.1.
std::vector<AttentionDump> taxonomy_fixture();

/// A targeted corruption of a valid dump. In-memory cases edit the dump
/// before it is written; on-disk cases edit the written directory.
struct CorruptCase {
  std::string name;
  std::string check;  // validator entry expected to fail; empty for I/O-level errors
  ErrorKind expected;
  Paradigm base = Paradigm::MDM;
  std::function<void(AttentionDump&)> edit_dump;
  std::function<void(const std::filesystem::path&)> edit_dir;
};

/// Small valid dump (L=2, m=2, n=6) the corrupt cases start from.
AttentionDump corrupt_base(Paradigm paradigm);
const std::vector<CorruptCase>& corrupt_cases();

std::filesystem::path temp_dir(const std::string& name);

}  // namespace attnfloat::testing

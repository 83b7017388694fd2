// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "attnfloat/dump.hpp"

namespace attnfloat {

enum class TokenClass { Structural, Lexical };

std::string_view to_string(TokenClass c);
TokenClass parse_token_class(std::string_view s);

/// Unicode general-category groups used by the character predicate.
enum class CharGroup { Punctuation, Symbol, Separator, Control };

struct TokenMatcher {
  enum class Kind { Special, ExactText, AllCharsIn };
  Kind kind = Kind::Special;
  std::string text;              // ExactText
  std::set<CharGroup> groups;    // AllCharsIn
};

struct TokenClassRule {
  TokenMatcher matcher;
  TokenClass token_class = TokenClass::Structural;
};

/// Ordered rules, first match wins; `fallback` makes the set total.
struct TokenRuleSet {
  std::vector<TokenClassRule> rules;
  TokenClass fallback = TokenClass::Lexical;
  /// Code points treated as whitespace by AllCharsIn matchers when Separator
  /// is requested (tokenizer space markers such as U+2581 and U+0120).
  std::set<char32_t> space_markers;

  /// special flag -> structural; all chars punctuation/symbol/whitespace ->
  /// structural; everything else lexical.
  static TokenRuleSet defaults();
  static TokenRuleSet from_json(std::string_view text);
  static TokenRuleSet load(const std::filesystem::path& path);
};

/// Decodes UTF-8; invalid sequences map to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view text);

TokenClass classify_token(const TokenRecord& token, const TokenRuleSet& rules = TokenRuleSet::defaults());

struct FrequencyRow {
  std::string token_text;
  std::size_t count = 0;
  double proportion = 0.0;
  TokenClass token_class = TokenClass::Lexical;
};

/// Pooled floating-token counts. One occurrence is one membership of a
/// position in one per-(layer, step) dominant set.
struct FloatingFrequencyTable {
  std::vector<FrequencyRow> rows;  // proportion descending, ties by text
  std::size_t total = 0;

  double structural_share() const;
  double share_of(std::string_view token_text) const;
  /// Share of `token_text` among structural occurrences only.
  double structural_share_of(std::string_view token_text) const;
};

/// Without an epsilon each dump uses default_epsilon(seq_len).
FloatingFrequencyTable floating_frequency(const std::vector<AttentionDump>& dumps, std::optional<double> epsilon,
                                          const TokenRuleSet& rules = TokenRuleSet::defaults());

/// Builds a table from raw (token, count) tallies; used when pooling partial
/// counts computed elsewhere.
FloatingFrequencyTable frequency_table(const std::vector<std::pair<TokenRecord, std::size_t>>& tallies,
                                       const TokenRuleSet& rules = TokenRuleSet::defaults());

}  // namespace attnfloat

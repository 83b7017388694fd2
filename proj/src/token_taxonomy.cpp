// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/token_taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>
#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "attnfloat/attn_stats.hpp"
#include "attnfloat/parallel.hpp"

namespace attnfloat {

std::string_view to_string(TokenClass c) { return c == TokenClass::Structural ? "structural" : "lexical"; }

TokenClass parse_token_class(std::string_view s) {
  if (s == "structural" || s == "STRUCTURAL") return TokenClass::Structural;
  if (s == "lexical" || s == "LEXICAL") return TokenClass::Lexical;
  throw Error(ErrorKind::InvalidArgument, "unknown token class '" + std::string(s) + "'");
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

namespace {

CharGroup group_of(char32_t c) {
  switch (u_charType(static_cast<UChar32>(c))) {
    case U_CONNECTOR_PUNCTUATION:
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
      return CharGroup::Punctuation;
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return CharGroup::Symbol;
    case U_SPACE_SEPARATOR:
    case U_LINE_SEPARATOR:
    case U_PARAGRAPH_SEPARATOR:
      return CharGroup::Separator;
    case U_CONTROL_CHAR:
    case U_FORMAT_CHAR:
      return CharGroup::Control;
    default:
      // letters, marks, numbers, unassigned: mapped to a group no rule asks for
      return static_cast<CharGroup>(-1);
  }
}

bool all_chars_in(std::string_view text, const std::set<CharGroup>& groups, const std::set<char32_t>& space_markers) {
  for (char32_t c : decode_utf8(text)) {
    if (groups.count(CharGroup::Separator) && space_markers.count(c)) continue;
    if (!groups.count(group_of(c))) return false;
  }
  return true;
}

bool matches(const TokenMatcher& m, const TokenRecord& token, const std::set<char32_t>& space_markers) {
  switch (m.kind) {
    case TokenMatcher::Kind::Special: return token.is_special;
    case TokenMatcher::Kind::ExactText: return token.token_text == m.text;
    case TokenMatcher::Kind::AllCharsIn: return all_chars_in(token.token_text, m.groups, space_markers);
  }
  return false;
}

CharGroup parse_group(const std::string& s) {
  if (s == "P" || s == "punctuation") return CharGroup::Punctuation;
  if (s == "S" || s == "symbol") return CharGroup::Symbol;
  if (s == "Z" || s == "separator" || s == "whitespace") return CharGroup::Separator;
  if (s == "C" || s == "control") return CharGroup::Control;
  throw Error(ErrorKind::InvalidArgument, "unknown character category '" + s + "'");
}

}  // namespace

TokenRuleSet TokenRuleSet::defaults() {
  TokenRuleSet r;
  r.rules.push_back({TokenMatcher{TokenMatcher::Kind::Special, {}, {}}, TokenClass::Structural});
  r.rules.push_back({TokenMatcher{TokenMatcher::Kind::AllCharsIn,
                                  {},
                                  {CharGroup::Punctuation, CharGroup::Symbol, CharGroup::Separator, CharGroup::Control}},
                     TokenClass::Structural});
  r.fallback = TokenClass::Lexical;
  r.space_markers = {U'▁', U'Ġ', U'Ċ'};
  return r;
}

// Rules file:
// {
//   "rules": [
//     {"match": "special", "class": "structural"},
//     {"match": "exact", "text": "<|mdm_mask|>", "class": "structural"},
//     {"match": "chars", "categories": ["P", "S", "Z", "C"], "class": "structural"}
//   ],
//   "fallback": "lexical",
//   "space_markers": ["▁", "Ġ"]
// }
TokenRuleSet TokenRuleSet::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("rules file is not valid JSON: ") + e.what());
  }
  TokenRuleSet out;
  out.space_markers = defaults().space_markers;
  try {
    for (const auto& r : j.at("rules")) {
      TokenClassRule rule;
      rule.token_class = parse_token_class(r.at("class").get<std::string>());
      const auto kind = r.at("match").get<std::string>();
      if (kind == "special") {
        rule.matcher.kind = TokenMatcher::Kind::Special;
      } else if (kind == "exact") {
        rule.matcher.kind = TokenMatcher::Kind::ExactText;
        rule.matcher.text = r.at("text").get<std::string>();
      } else if (kind == "chars") {
        rule.matcher.kind = TokenMatcher::Kind::AllCharsIn;
        for (const auto& g : r.at("categories")) rule.matcher.groups.insert(parse_group(g.get<std::string>()));
      } else {
        throw Error(ErrorKind::InvalidArgument, "unknown matcher '" + kind + "'");
      }
      out.rules.push_back(std::move(rule));
    }
    if (j.contains("fallback")) out.fallback = parse_token_class(j.at("fallback").get<std::string>());
    if (j.contains("space_markers")) {
      out.space_markers.clear();
      for (const auto& m : j.at("space_markers"))
        for (char32_t c : decode_utf8(m.get<std::string>())) out.space_markers.insert(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed rules file: ") + e.what());
  }
  return out;
}

TokenRuleSet TokenRuleSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingInput, "cannot open rules file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

TokenClass classify_token(const TokenRecord& token, const TokenRuleSet& rules) {
  for (const auto& rule : rules.rules)
    if (matches(rule.matcher, token, rules.space_markers)) return rule.token_class;
  return rules.fallback;
}

double FloatingFrequencyTable::structural_share() const {
  double s = 0.0;
  for (const auto& r : rows)
    if (r.token_class == TokenClass::Structural) s += r.proportion;
  return s;
}

double FloatingFrequencyTable::share_of(std::string_view token_text) const {
  std::size_t c = 0;
  for (const auto& r : rows)
    if (r.token_text == token_text) c += r.count;
  return total ? static_cast<double>(c) / static_cast<double>(total) : 0.0;
}

double FloatingFrequencyTable::structural_share_of(std::string_view token_text) const {
  std::size_t c = 0, structural = 0;
  for (const auto& r : rows) {
    if (r.token_class != TokenClass::Structural) continue;
    structural += r.count;
    if (r.token_text == token_text) c += r.count;
  }
  return structural ? static_cast<double>(c) / static_cast<double>(structural) : 0.0;
}

FloatingFrequencyTable frequency_table(const std::vector<std::pair<TokenRecord, std::size_t>>& tallies,
                                       const TokenRuleSet& rules) {
  std::map<std::pair<std::string, TokenClass>, std::size_t> merged;
  std::size_t total = 0;
  for (const auto& [token, count] : tallies) {
    if (count == 0) continue;
    merged[{token.token_text, classify_token(token, rules)}] += count;
    total += count;
  }

  FloatingFrequencyTable table;
  table.total = total;
  for (const auto& [key, count] : merged) {
    table.rows.push_back(
        FrequencyRow{key.first, count, static_cast<double>(count) / static_cast<double>(total), key.second});
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.token_text != b.token_text) return a.token_text < b.token_text;
    return a.token_class < b.token_class;
  });
  return table;
}

FloatingFrequencyTable floating_frequency(const std::vector<AttentionDump>& dumps, std::optional<double> epsilon,
                                          const TokenRuleSet& rules) {
  // Per-dump tallies by position, merged afterwards.
  std::vector<std::vector<std::size_t>> per_dump(dumps.size());
  parallel_for(dumps.size(), [&](std::size_t d) {
    const auto& dump = dumps[d];
    auto& counts = per_dump[d];
    counts.assign(dump.seq_len, 0);
    const double eps = epsilon.value_or(default_epsilon(dump.seq_len));
    for (std::size_t l = 0; l < dump.num_layers; ++l)
      for (std::size_t t = 0; t < dump.num_steps; ++t)
        for (auto p : detect_dominant(received_attention(dump, l, t), eps).positions) ++counts[p];
  });

  std::vector<std::pair<TokenRecord, std::size_t>> tallies;
  for (std::size_t d = 0; d < dumps.size(); ++d)
    for (std::size_t p = 0; p < per_dump[d].size(); ++p)
      if (per_dump[d][p] > 0) tallies.emplace_back(dumps[d].tokens.at(p), per_dump[d][p]);
  return frequency_table(tallies, rules);
}

}  // namespace attnfloat

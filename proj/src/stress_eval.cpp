// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include "attnfloat/stress_eval.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "attnfloat/error.hpp"

namespace attnfloat {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(StressKind k) {
  switch (k) {
    case StressKind::Noise: return "noise";
    case StressKind::Position: return "position";
    case StressKind::Integration: return "integration";
  }
  return "noise";
}

StressKind parse_stress_kind(std::string_view s) {
  if (s == "noise" || s == "NOISE") return StressKind::Noise;
  if (s == "position" || s == "POSITION") return StressKind::Position;
  if (s == "integration" || s == "INTEGRATION") return StressKind::Integration;
  throw Error(ErrorKind::InvalidArgument, "unknown stress kind '" + std::string(s) + "'");
}

namespace {

// std::uniform_int_distribution and std::shuffle are implementation-defined;
// plans must be identical across standard libraries, so draws use the raw
// engine output.
std::size_t draw(std::mt19937_64& rng, std::size_t bound) { return static_cast<std::size_t>(rng() % bound); }

std::vector<std::size_t> seeded_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[draw(rng, i)]);
  return idx;
}

std::mt19937_64 item_rng(std::uint64_t seed, std::size_t item) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(item)};
  return std::mt19937_64(seq);
}

const std::string& gold_doc(const BaseItem& item) {
  if (item.evidence_docs.empty()) throw Error(ErrorKind::InvalidArgument, "base item " + item.id + " has no evidence doc");
  return item.evidence_docs.front();
}

StressItem skeleton(const BaseItem& base, StressKind kind, std::size_t param, std::string variant_id) {
  if (base.gold_answers.empty()) throw Error(ErrorKind::InvalidArgument, "base item " + base.id + " has no gold answer");
  StressItem item;
  item.variant_id = std::move(variant_id);
  item.kind = kind;
  item.base_id = base.id;
  item.param = param;
  item.question = base.question;
  item.gold_answers = base.gold_answers;
  return item;
}

}  // namespace

StressPlan build_plan(const std::vector<BaseItem>& base_items, const std::vector<std::string>& distractors,
                      StressKind kind, const PlanParams& params) {
  StressPlan plan;
  plan.kind = kind;
  for (std::size_t b = 0; b < base_items.size(); ++b) {
    const BaseItem& base = base_items[b];
    auto rng = item_rng(params.seed, b);
    switch (kind) {
      case StressKind::Noise: {
        const std::size_t most = params.distractor_counts.empty()
                                     ? 0
                                     : *std::max_element(params.distractor_counts.begin(), params.distractor_counts.end());
        if (most > distractors.size())
          throw Error(ErrorKind::InsufficientDistractors, "need " + std::to_string(most) + " distractors, pool has " +
                                                              std::to_string(distractors.size()));
        const auto order = seeded_permutation(distractors.size(), rng);
        for (std::size_t count : params.distractor_counts) {
          StressItem item = skeleton(base, kind, count, base.id + ":n" + std::to_string(count));
          for (std::size_t i = 0; i < count; ++i) item.docs.push_back({distractors[order[i]], false});
          const std::size_t slot = draw(rng, count + 1);
          item.docs.insert(item.docs.begin() + static_cast<std::ptrdiff_t>(slot), StressDoc{gold_doc(base), true});
          plan.items.push_back(std::move(item));
        }
        break;
      }
      case StressKind::Position: {
        if (params.num_docs == 0) throw Error(ErrorKind::InvalidArgument, "num_docs must be positive");
        const std::size_t needed = params.num_docs - 1;
        if (needed > distractors.size())
          throw Error(ErrorKind::InsufficientDistractors, "need " + std::to_string(needed) + " distractors, pool has " +
                                                              std::to_string(distractors.size()));
        const auto order = seeded_permutation(distractors.size(), rng);
        for (std::size_t index : params.gold_indices) {
          if (index < 1 || index > params.num_docs)
            throw Error(ErrorKind::InvalidArgument, "gold index " + std::to_string(index) + " outside 1.." +
                                                        std::to_string(params.num_docs));
          StressItem item = skeleton(base, kind, index, base.id + ":p" + std::to_string(index));
          for (std::size_t i = 0; i < needed; ++i) item.docs.push_back({distractors[order[i]], false});
          item.docs.insert(item.docs.begin() + static_cast<std::ptrdiff_t>(index - 1), StressDoc{gold_doc(base), true});
          plan.items.push_back(std::move(item));
        }
        break;
      }
      case StressKind::Integration: {
        const std::size_t k = base.evidence_docs.size();
        if (k == 0) throw Error(ErrorKind::InvalidArgument, "base item " + base.id + " has no evidence docs");
        std::vector<std::vector<std::size_t>> perms;
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        // k! capped to avoid overflow; only compared against the requested count
        std::size_t total = 1;
        for (std::size_t i = 2; i <= k && total <= params.permutations; ++i) total *= i;
        if (params.permutations == 0 || params.permutations >= total) {
          do perms.push_back(idx);
          while (std::next_permutation(idx.begin(), idx.end()));
        } else {
          std::set<std::vector<std::size_t>> seen;
          while (perms.size() < params.permutations) {
            auto p = seeded_permutation(k, rng);
            if (seen.insert(p).second) perms.push_back(std::move(p));
          }
        }
        for (std::size_t p = 0; p < perms.size(); ++p) {
          StressItem item = skeleton(base, kind, p, base.id + ":perm" + std::to_string(p));
          for (std::size_t i : perms[p]) item.docs.push_back({base.evidence_docs[i], true});
          plan.items.push_back(std::move(item));
        }
        break;
      }
    }
  }
  return plan;
}

std::string plan_to_json(const StressPlan& plan) {
  ordered_json arr = ordered_json::array();
  for (const auto& item : plan.items) {
    ordered_json j;
    j["variant_id"] = item.variant_id;
    j["kind"] = to_string(item.kind);
    j["base_id"] = item.base_id;
    j["param"] = item.param;
    j["question"] = item.question;
    j["docs"] = ordered_json::array();
    for (const auto& d : item.docs) j["docs"].push_back(ordered_json{{"text", d.text}, {"is_gold", d.is_gold}});
    j["gold_answers"] = item.gold_answers;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

StressPlan plan_from_json(std::string_view text) {
  StressPlan plan;
  try {
    const auto arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw Error(ErrorKind::SchemaViolation, "plan file must be a JSON array");
    for (const auto& j : arr) {
      StressItem item;
      item.variant_id = j.at("variant_id").get<std::string>();
      item.kind = parse_stress_kind(j.at("kind").get<std::string>());
      item.base_id = j.value("base_id", std::string{});
      item.param = j.value("param", std::size_t{0});
      item.question = j.at("question").get<std::string>();
      for (const auto& d : j.at("docs")) item.docs.push_back({d.at("text").get<std::string>(), d.at("is_gold").get<bool>()});
      item.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
      plan.items.push_back(std::move(item));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("malformed plan: ") + e.what());
  }
  if (!plan.items.empty()) plan.kind = plan.items.front().kind;
  std::set<std::string> ids;
  for (const auto& item : plan.items) {
    if (item.kind != plan.kind) throw Error(ErrorKind::SchemaViolation, "plan mixes stress kinds");
    if (!ids.insert(item.variant_id).second)
      throw Error(ErrorKind::SchemaViolation, "duplicate variant_id " + item.variant_id);
    if (item.gold_answers.empty()) throw Error(ErrorKind::SchemaViolation, item.variant_id + " has no gold answer");
    const auto golds = std::count_if(item.docs.begin(), item.docs.end(), [](const auto& d) { return d.is_gold; });
    if (item.kind != StressKind::Integration && golds != 1)
      throw Error(ErrorKind::SchemaViolation, item.variant_id + " must contain exactly one gold doc");
  }
  return plan;
}

void base_from_json(std::string_view text, std::vector<BaseItem>& items, std::vector<std::string>& distractors) {
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& b : j.at("items")) {
      items.push_back(BaseItem{b.at("id").get<std::string>(), b.at("question").get<std::string>(),
                               b.at("evidence_docs").get<std::vector<std::string>>(),
                               b.at("gold_answers").get<std::vector<std::string>>()});
    }
    if (j.contains("distractors")) distractors = j.at("distractors").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("malformed base file: ") + e.what());
  }
}

Predictions predictions_from_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text).get<Predictions>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("predictions must map variant_id to string: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<std::string> answer_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current != "a" && current != "an" && current != "the") tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
  }
  flush();
  return tokens;
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  for (const auto& t : answer_tokens(text)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

int accuracy(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  const std::string pred = normalize_answer(prediction);
  for (const auto& g : gold_answers) {
    const std::string gold = normalize_answer(g);
    if (gold.empty() ? pred.empty() : pred.find(gold) != std::string::npos) return 1;
  }
  return 0;
}

double token_f1(std::string_view prediction, const std::vector<std::string>& gold_answers) {
  const auto pred = answer_tokens(prediction);
  double best = 0.0;
  for (const auto& g : gold_answers) {
    const auto gold = answer_tokens(g);
    double f1 = 0.0;
    if (pred.empty() || gold.empty()) {
      f1 = pred.empty() && gold.empty() ? 1.0 : 0.0;
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& t : gold) ++counts[t];
      std::size_t common = 0;
      for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
          --it->second;
          ++common;
        }
      }
      if (common > 0) {
        const double precision = static_cast<double>(common) / static_cast<double>(pred.size());
        const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
        f1 = 2.0 * precision * recall / (precision + recall);
      }
    }
    best = std::max(best, f1);
  }
  return best;
}

ScoreReport aggregate(const StressPlan& plan, const Predictions& predictions) {
  ScoreReport report;
  report.kind = plan.kind;
  std::map<std::size_t, CurvePoint> points;
  for (const auto& item : plan.items) {
    auto it = predictions.find(item.variant_id);
    if (it == predictions.end()) throw Error(ErrorKind::MissingPrediction, "no prediction for " + item.variant_id);
    VariantScore s{item.variant_id, item.base_id, item.param, accuracy(it->second, item.gold_answers),
                   token_f1(it->second, item.gold_answers)};
    auto& p = points[item.param];
    p.param = item.param;
    ++p.items;
    p.acc += s.acc;
    p.f1 += s.f1;
    report.variants.push_back(std::move(s));
  }
  for (auto& [param, p] : points) {
    p.acc /= static_cast<double>(p.items);
    p.f1 /= static_cast<double>(p.items);
    report.curve.push_back(p);
  }
  if (report.curve.empty()) return report;

  auto [acc_lo, acc_hi] = std::minmax_element(report.curve.begin(), report.curve.end(),
                                              [](const auto& a, const auto& b) { return a.acc < b.acc; });
  auto [f1_lo, f1_hi] = std::minmax_element(report.curve.begin(), report.curve.end(),
                                            [](const auto& a, const auto& b) { return a.f1 < b.f1; });
  if (plan.kind == StressKind::Position) {
    report.spread_acc = acc_hi->acc - acc_lo->acc;
    report.spread_f1 = f1_hi->f1 - f1_lo->f1;
  }
  if (plan.kind == StressKind::Integration) {
    const double n = static_cast<double>(report.curve.size());
    for (const auto& p : report.curve) {
      report.mean_acc += p.acc / n;
      report.mean_f1 += p.f1 / n;
    }
    for (const auto& p : report.curve) {
      report.variance_acc += (p.acc - report.mean_acc) * (p.acc - report.mean_acc) / n;
      report.variance_f1 += (p.f1 - report.mean_f1) * (p.f1 - report.mean_f1) / n;
    }
  }
  return report;
}

Table report_table(const ScoreReport& report) {
  Table t;
  t.schema = {{"kind", ColumnType::Text},
              {"row", ColumnType::Text},
              {"items", ColumnType::Integer},
              {"acc", ColumnType::Real},
              {"f1", ColumnType::Real}};
  for (auto d : kMetricDefinitions) t.notes.emplace_back(d);
  const std::string kind(to_string(report.kind));
  for (const auto& p : report.curve)
    t.add_row({kind, std::to_string(p.param), static_cast<std::int64_t>(p.items), p.acc, p.f1});
  const auto points = static_cast<std::int64_t>(report.curve.size());
  if (report.kind == StressKind::Position) t.add_row({kind, std::string("spread"), points, report.spread_acc, report.spread_f1});
  if (report.kind == StressKind::Integration) {
    t.add_row({kind, std::string("mean"), points, report.mean_acc, report.mean_f1});
    t.add_row({kind, std::string("variance"), points, report.variance_acc, report.variance_f1});
  }
  return t;
}

Table variant_table(const ScoreReport& report) {
  Table t;
  t.schema = {{"variant_id", ColumnType::Text},
              {"base_id", ColumnType::Text},
              {"param", ColumnType::Integer},
              {"acc", ColumnType::Integer},
              {"f1", ColumnType::Real}};
  for (const auto& v : report.variants)
    t.add_row({v.variant_id, v.base_id, static_cast<std::int64_t>(v.param), static_cast<std::int64_t>(v.acc), v.f1});
  return t;
}

}  // namespace attnfloat

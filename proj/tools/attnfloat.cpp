// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

// attnfloat: command-line front end for the attention analyses.
//
// Exit codes: 0 success, 2 validation failure, 3 missing input, 4 internal
// error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attnfloat/attention_flow.hpp"
#include "attnfloat/attn_stats.hpp"
#include "attnfloat/dump.hpp"
#include "attnfloat/qk_geometry.hpp"
#include "attnfloat/report.hpp"
#include "attnfloat/retrieval_heads.hpp"
#include "attnfloat/stress_eval.hpp"
#include "attnfloat/token_taxonomy.hpp"

namespace af = attnfloat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitMissingInput = 3;
constexpr int kExitInternal = 4;

struct GlobalOptions {
  std::string out = "-";
  std::string format;
  std::optional<double> epsilon;
  std::uint64_t seed = 0;
};

enum class OutFormat { CSV, JSON, SVG };

OutFormat resolve_format(const GlobalOptions& g, OutFormat fallback = OutFormat::CSV) {
  std::string f = g.format;
  if (f.empty()) {
    const auto dot = g.out.rfind('.');
    if (g.out != "-" && dot != std::string::npos) f = g.out.substr(dot + 1);
  }
  if (f == "csv") return OutFormat::CSV;
  if (f == "json") return OutFormat::JSON;
  if (f == "svg") return OutFormat::SVG;
  if (f.empty()) return fallback;
  throw af::Error(af::ErrorKind::InvalidArgument, "unknown output format '" + f + "'");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw af::Error(af::ErrorKind::MissingInput, "cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw af::Error(af::ErrorKind::MissingInput, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Writes a table, or the heatmap when SVG output was requested.
void emit(const GlobalOptions& g, const af::Table& table, const std::optional<af::HeatmapSpec>& heatmap = std::nullopt) {
  const OutFormat f = resolve_format(g);
  if (f == OutFormat::SVG) {
    if (!heatmap) throw af::Error(af::ErrorKind::InvalidArgument, "this command has no SVG rendering");
    write_text(g.out, af::render_heatmap(*heatmap));
    return;
  }
  if (f == OutFormat::JSON)
    for (const auto& note : table.notes) std::cerr << "# " << note << "\n";
  write_text(g.out, af::emit_table(table, f == OutFormat::JSON ? af::TableFormat::JSON : af::TableFormat::CSV));
}

std::string join(const std::vector<std::size_t>& v, char sep = ';') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
  return s;
}

std::vector<std::string> token_labels(const af::AttentionDump& dump) {
  std::vector<std::string> labels;
  for (const auto& t : dump.tokens) labels.push_back(std::to_string(t.position) + ":" + t.token_text);
  return labels;
}

af::Matrix as_row(const std::vector<double>& v) {
  af::Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

double epsilon_for(const GlobalOptions& g, const af::AttentionDump& dump) {
  return g.epsilon.value_or(af::default_epsilon(dump.seq_len));
}

// ---------------------------------------------------------------------------

int run_validate(const GlobalOptions& g, const std::string& dir) {
  const af::AttentionDump dump = af::read_dump_unchecked(dir);
  const af::ValidationReport report = af::validate_dump(dump);
  af::Table t;
  t.schema = {{"check", af::ColumnType::Text},
              {"passed", af::ColumnType::Integer},
              {"deviation", af::ColumnType::Real},
              {"detail", af::ColumnType::Text}};
  for (const auto& e : report.entries)
    t.add_row({e.check, static_cast<std::int64_t>(e.passed), e.deviation,
               e.passed ? e.detail : std::string(af::to_string(e.failure_kind)) + ": " + e.detail});
  t.notes = report.notes;
  emit(g, t);
  return report.ok() ? kExitOk : kExitValidation;
}

int run_stats(const GlobalOptions& g, const std::string& dir, std::size_t layer, std::optional<std::size_t> step) {
  const af::AttentionDump dump = af::read_dump(dir);
  const auto profile = step ? af::received_attention(dump, layer, *step) : af::step_averaged_received_attention(dump, layer);
  const auto set = af::detect_dominant(profile, epsilon_for(g, dump));
  af::Table t;
  t.schema = {{"position", af::ColumnType::Integer},
              {"token_text", af::ColumnType::Text},
              {"received", af::ColumnType::Real},
              {"dominant", af::ColumnType::Integer},
              {"margin", af::ColumnType::Real}};
  t.notes.push_back("epsilon " + af::format_real(set.epsilon) + (step ? "" : "; profile averaged over steps"));
  if (dump.paradigm == af::Paradigm::ARM)
    t.notes.emplace_back("causal map: received attention averages over all rows, favouring early positions");
  for (std::size_t j = 0; j < profile.received.size(); ++j) {
    double margin = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < set.positions.size(); ++k)
      if (set.positions[k] == j) margin = set.margins[k];
    t.add_row({static_cast<std::int64_t>(j), dump.tokens[j].token_text, profile.received[j],
               static_cast<std::int64_t>(set.contains(j)), margin});
  }
  af::HeatmapSpec spec;
  spec.values = as_row(profile.received);
  spec.row_labels = {"L" + std::to_string(layer)};
  spec.col_labels = token_labels(dump);
  spec.title = "received attention, layer " + std::to_string(layer);
  spec.marked_columns.insert(set.positions.begin(), set.positions.end());
  emit(g, t, spec);
  return kExitOk;
}

int run_absorb(const GlobalOptions& g, const std::string& dir, const std::string& set_mode) {
  const af::AttentionDump dump = af::read_dump(dir);
  const auto mode = set_mode == "bos" ? af::SinkSetMode::Bos : af::SinkSetMode::Detected;
  if (set_mode != "bos" && set_mode != "detected")
    throw af::Error(af::ErrorKind::InvalidArgument, "--set must be bos or detected");
  const auto curve = af::absorption_curve(dump, epsilon_for(g, dump), mode);
  af::Table t;
  t.schema = {{"layer", af::ColumnType::Integer},
              {"absorption", af::ColumnType::Real},
              {"set_size", af::ColumnType::Integer},
              {"positions", af::ColumnType::Text}};
  t.notes.push_back("set " + set_mode + ", epsilon " + af::format_real(epsilon_for(g, dump)) +
                    (dump.paradigm == af::Paradigm::MDM ? "; profiles averaged over steps before detection" : ""));
  std::vector<double> values;
  for (const auto& row : curve) {
    t.add_row({static_cast<std::int64_t>(row.layer), row.absorption, static_cast<std::int64_t>(row.positions.size()),
               join(row.positions)});
    values.push_back(row.absorption);
  }
  af::HeatmapSpec spec;
  spec.values = as_row(values).transpose();
  spec.col_labels = {"absorption %"};
  spec.title = "layer-wise absorption rate";
  emit(g, t, spec);
  return kExitOk;
}

int run_drift(const GlobalOptions& g, const std::string& dir, std::size_t layer) {
  const af::AttentionDump dump = af::read_dump(dir);
  const auto trace = af::drift_trace(dump, layer, epsilon_for(g, dump));
  af::Table t;
  t.schema = {{"step", af::ColumnType::Integer},
              {"positions", af::ColumnType::Text},
              {"set_size", af::ColumnType::Integer},
              {"centroid", af::ColumnType::Real},
              {"jaccard_next", af::ColumnType::Real}};
  t.notes.emplace_back("jaccard_next and centroid are summary quantifications of the step-wise maps, not model outputs");
  t.notes.push_back("layer " + std::to_string(layer) + ", epsilon " + af::format_real(epsilon_for(g, dump)));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < trace.sets.size(); ++s) {
    t.add_row({static_cast<std::int64_t>(s), join(trace.sets[s].positions),
               static_cast<std::int64_t>(trace.sets[s].positions.size()), trace.centroid[s].value_or(nan),
               s < trace.jaccard.size() ? trace.jaccard[s] : nan});
  }
  af::HeatmapSpec spec;
  spec.values.resize(static_cast<Eigen::Index>(dump.num_steps), static_cast<Eigen::Index>(dump.seq_len));
  for (std::size_t s = 0; s < dump.num_steps; ++s) {
    const auto p = af::received_attention(dump, layer, s);
    for (std::size_t j = 0; j < p.received.size(); ++j)
      spec.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = p.received[j];
    for (auto j : trace.sets[s].positions) spec.marked_columns.insert(j);
  }
  for (std::size_t s = 0; s < dump.num_steps; ++s) spec.row_labels.push_back("step " + std::to_string(s));
  spec.title = "received attention by denoising step, layer " + std::to_string(layer);
  emit(g, t, spec);
  return kExitOk;
}

int run_classify(const GlobalOptions& g, const std::vector<std::string>& dirs, const std::string& rules_path,
                 const std::string& mask_token) {
  std::vector<af::AttentionDump> dumps;
  for (const auto& d : dirs) dumps.push_back(af::read_dump(d));
  const auto rules = rules_path.empty() ? af::TokenRuleSet::defaults() : af::TokenRuleSet::load(rules_path);
  const auto table = af::floating_frequency(dumps, g.epsilon, rules);
  af::Table t;
  t.schema = {{"token_text", af::ColumnType::Text},
              {"count", af::ColumnType::Integer},
              {"proportion", af::ColumnType::Real},
              {"class", af::ColumnType::Text}};
  t.notes.emplace_back("counting unit: one position in one per-(layer, step) dominant set");
  t.notes.push_back("occurrences " + std::to_string(table.total) + ", structural share " +
                    af::format_real(table.structural_share()));
  t.notes.push_back("mask token " + mask_token + ": share of all " + af::format_real(table.share_of(mask_token)) +
                    ", share of structural " + af::format_real(table.structural_share_of(mask_token)));
  for (const auto& r : table.rows)
    t.add_row({r.token_text, static_cast<std::int64_t>(r.count), r.proportion, std::string(af::to_string(r.token_class))});
  emit(g, t);
  return kExitOk;
}

af::Table matrix_table(const af::Matrix& m, const std::vector<std::string>& col_labels) {
  af::Table t;
  t.schema.push_back({"row", af::ColumnType::Integer});
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    t.schema.push_back({col_labels.empty() ? "c" + std::to_string(j) : col_labels[static_cast<std::size_t>(j)],
                        af::ColumnType::Real});
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<af::Cell> row{static_cast<std::int64_t>(i)};
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
    t.add_row(std::move(row));
  }
  return t;
}

std::string with_suffix(const std::string& out, const std::string& suffix, const std::string& ext) {
  if (out == "-" || out.empty()) return "-";
  const auto dot = out.rfind('.');
  const auto slash = out.rfind('/');
  const std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? out.substr(0, dot) : out;
  return stem + "_" + suffix + "." + ext;
}

int run_qk(const GlobalOptions& g, const std::string& dir, std::size_t layer, std::size_t step,
           std::optional<std::size_t> head, bool depth) {
  const af::AttentionDump dump = af::read_dump(dir);
  const double eps = epsilon_for(g, dump);

  if (depth) {
    const auto profile = af::depth_profile(dump, eps);
    af::Table t;
    t.schema = {{"layer", af::ColumnType::Integer}, {"steps_used", af::ColumnType::Integer},
                {"score_contrast", af::ColumnType::Real}, {"norm_contrast", af::ColumnType::Real},
                {"cosine_contrast", af::ColumnType::Real}};
    t.notes.emplace_back("contrast = mean over floating key columns minus mean over other columns; head-averaged statistics");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : profile) {
      t.add_row({static_cast<std::int64_t>(e.layer), static_cast<std::int64_t>(e.steps_used),
                 e.contrast ? e.contrast->score.difference : nan, e.contrast ? e.contrast->norm.difference : nan,
                 e.contrast ? e.contrast->cosine.difference : nan});
    }
    emit(g, t);
    return kExitOk;
  }

  af::QKDecomposition decomp = head ? af::decompose(dump, layer, step, *head) : af::decompose_head_mean(dump, layer, step);
  const auto floating = af::detect_dominant(af::received_attention(dump, layer, step), eps).positions;
  decomp.floating_columns = floating;

  const OutFormat f = resolve_format(g);
  const std::string ext = f == OutFormat::SVG ? "svg" : (f == OutFormat::JSON ? "json" : "csv");
  const std::string who = head ? "head " + std::to_string(*head) : "head mean";
  const std::vector<std::pair<std::string, const af::Matrix*>> panels{
      {"score", &decomp.score}, {"cos", &decomp.cosine}, {"norm", &decomp.norm_product}};
  for (const auto& [name, m] : panels) {
    const std::string path = with_suffix(g.out, name, ext);
    if (f == OutFormat::SVG) {
      af::HeatmapSpec spec;
      spec.values = *m;
      spec.title = "QK " + name + ", layer " + std::to_string(layer) + " step " + std::to_string(step) + ", " + who;
      spec.colormap = name == "norm" ? af::Colormap::Sequential : af::Colormap::Diverging;
      spec.marked_columns.insert(floating.begin(), floating.end());
      write_text(path, af::render_heatmap(spec));
    } else {
      write_text(path, af::emit_table(matrix_table(*m, {}), f == OutFormat::JSON ? af::TableFormat::JSON
                                                                                   : af::TableFormat::CSV));
    }
  }
  if (!floating.empty() && floating.size() < dump.seq_len) {
    const af::ColumnContrast c = head ? af::column_contrast(decomp, floating)
                                      : af::head_averaged_contrast(dump, layer, step, floating);
    std::cerr << "floating columns: " << join(floating) << "\n"
              << "contrast score " << af::format_real(c.score.difference) << " norm "
              << af::format_real(c.norm.difference) << " cosine " << af::format_real(c.cosine.difference) << "\n";
  } else {
    std::cerr << "floating columns: none (contrast undefined)\n";
  }
  return kExitOk;
}

int run_heads(const GlobalOptions& g, const std::string& dir, std::size_t k) {
  const af::AttentionDump dump = af::read_dump(dir);
  const auto map = af::retrieval_scores(dump, k);
  const OutFormat f = resolve_format(g);
  if (f == OutFormat::SVG) {
    write_text(g.out, af::render_heatmap(af::score_heatmap(map)));
    std::cerr << af::emit_table(af::layer_mean_table(map), af::TableFormat::CSV);
  } else if (f == OutFormat::CSV) {
    write_text(g.out, af::retrieval_csv(map));
  } else {
    write_text(g.out, af::emit_table(af::parse_table(af::retrieval_csv(map),
                                                     {{"layer", af::ColumnType::Integer},
                                                      {"head", af::ColumnType::Integer},
                                                      {"hits", af::ColumnType::Integer},
                                                      {"events", af::ColumnType::Integer},
                                                      {"k", af::ColumnType::Integer},
                                                      {"score", af::ColumnType::Real}}),
                                     af::TableFormat::JSON));
  }
  return kExitOk;
}

af::RolloutConfig rollout_config(double alpha, const std::string& normalize, std::optional<std::size_t> step) {
  af::RolloutConfig cfg;
  cfg.alpha = alpha;
  cfg.normalize_mode = af::parse_normalize_mode(normalize);
  cfg.step_selection = step ? af::StepSelection::PerStep : af::StepSelection::StepAveraged;
  return cfg;
}

int run_flow(const GlobalOptions& g, const std::string& dir, double alpha, const std::string& normalize,
             std::optional<std::size_t> step, bool tokens) {
  const af::AttentionDump dump = af::read_dump(dir);
  const auto influence = af::rollout(dump, step.value_or(0), rollout_config(alpha, normalize, step));
  af::HeatmapSpec spec;
  af::Table t;
  if (tokens || dump.regions.empty()) {
    spec.values = influence.R;
    spec.row_labels = spec.col_labels = token_labels(dump);
    spec.title = "token-level influence R";
    t = matrix_table(influence.R, {});
  } else {
    const auto flow = af::region_flow(influence, dump.regions);
    spec.values = flow.display;
    spec.row_labels = spec.col_labels = flow.labels;
    spec.title = "region-level attention flow (row-normalized)";
    t.schema.push_back({"source", af::ColumnType::Text});
    for (const auto& l : flow.labels) t.schema.push_back({l, af::ColumnType::Real});
    for (std::size_t p = 0; p < flow.labels.size(); ++p) {
      std::vector<af::Cell> row{flow.labels[p]};
      for (Eigen::Index q = 0; q < flow.display.cols(); ++q) row.emplace_back(flow.display(static_cast<Eigen::Index>(p), q));
      t.add_row(std::move(row));
    }
  }
  t.notes.push_back("alpha " + af::format_real(alpha) + ", normalize " + normalize + ", " +
                    (step ? "step " + std::to_string(*step) : std::string("steps averaged")));
  emit(g, t, spec);
  return kExitOk;
}

int run_gold_shift(const GlobalOptions& g, const std::vector<std::string>& dirs, const std::vector<std::string>& gold,
                   double alpha, const std::string& normalize) {
  std::vector<af::AttentionDump> dumps;
  for (const auto& d : dirs) dumps.push_back(af::read_dump(d));
  const auto report = af::gold_shift_report(dumps, gold, rollout_config(alpha, normalize, std::nullopt));
  af::Table t;
  t.schema = {{"dump", af::ColumnType::Text},
              {"gold", af::ColumnType::Text},
              {"peak", af::ColumnType::Text},
              {"peak_share", af::ColumnType::Real}};
  t.notes.push_back(std::string("verdict: ") + std::string(af::to_string(report.verdict)));
  for (std::size_t i = 0; i < report.entries.size(); ++i)
    t.add_row({dirs[i], report.entries[i].gold_label, report.entries[i].peak_label, report.entries[i].peak_share});
  emit(g, t);
  std::cerr << "verdict: " << af::to_string(report.verdict) << "\n";
  return kExitOk;
}

int run_stress_build(const GlobalOptions& g, const std::string& base_path, const std::string& kind,
                     const af::PlanParams& params_in) {
  std::vector<af::BaseItem> items;
  std::vector<std::string> distractors;
  af::base_from_json(read_text(base_path), items, distractors);
  af::PlanParams params = params_in;
  params.seed = g.seed;
  const auto plan = af::build_plan(items, distractors, af::parse_stress_kind(kind), params);
  write_text(g.out, af::plan_to_json(plan));
  return kExitOk;
}

int run_stress_score(const GlobalOptions& g, const std::string& plan_path, const std::string& pred_path,
                     bool per_variant) {
  const auto plan = af::plan_from_json(read_text(plan_path));
  const auto predictions = af::predictions_from_json(read_text(pred_path));
  const auto report = af::aggregate(plan, predictions);
  af::Table t = per_variant ? af::variant_table(report) : af::report_table(report);
  if (per_variant)
    for (auto d : af::kMetricDefinitions) t.notes.emplace_back(d);
  emit(g, t);
  return kExitOk;
}

int run_render(const GlobalOptions& g, const std::string& in, const std::string& title, const std::string& colormap,
               const std::vector<std::size_t>& marks) {
  const auto records = af::parse_csv(read_text(in));
  if (records.size() < 2) throw af::Error(af::ErrorKind::SchemaViolation, "matrix CSV needs a header and one row");
  const auto& header = records.front();
  af::HeatmapSpec spec;
  spec.col_labels.assign(header.begin() + 1, header.end());
  spec.values.resize(static_cast<Eigen::Index>(records.size() - 1), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != header.size()) throw af::Error(af::ErrorKind::SchemaViolation, "ragged matrix CSV");
    spec.row_labels.push_back(records[i][0]);
    for (std::size_t j = 1; j < header.size(); ++j) {
      char* end = nullptr;
      const double v = std::strtod(records[i][j].c_str(), &end);
      if (*end != '\0') throw af::Error(af::ErrorKind::SchemaViolation, "'" + records[i][j] + "' is not a number");
      spec.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = v;
    }
  }
  spec.title = title;
  spec.colormap = colormap == "diverging" ? af::Colormap::Diverging : af::Colormap::Sequential;
  spec.marked_columns.insert(marks.begin(), marks.end());
  write_text(g.out, af::render_heatmap(spec));
  return kExitOk;
}

int exit_code_for(af::ErrorKind kind) {
  return kind == af::ErrorKind::MissingInput ? kExitMissingInput : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attnfloat: attention sink and floating analysis for attention dumps"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--out", g.out, "Output path ('-' for stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json", "svg"}));
  app.add_option("--epsilon", g.epsilon, "Dominance threshold (default 3/n)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for stress plan construction");

  std::string dump_dir;
  std::vector<std::string> dump_dirs;
  std::size_t layer = 0;
  std::optional<std::size_t> step;
  std::optional<std::size_t> head;

  auto* validate = app.add_subcommand("validate", "Check every dump invariant");
  validate->add_option("--dump", dump_dir)->required();

  auto* stats = app.add_subcommand("stats", "Received attention and dominant positions for one layer");
  stats->add_option("--dump", dump_dir)->required();
  stats->add_option("--layer", layer);
  stats->add_option("--step", step, "Denoising step (default: average over steps)");

  std::string set_mode = "detected";
  auto* absorb = app.add_subcommand("absorb", "Layer-wise absorption rate");
  absorb->add_option("--dump", dump_dir)->required();
  absorb->add_option("--set", set_mode, "bos or detected")->check(CLI::IsMember({"bos", "detected"}));

  auto* drift = app.add_subcommand("drift", "Dominant-set drift across denoising steps");
  drift->add_option("--dump", dump_dir)->required();
  drift->add_option("--layer", layer);

  std::string rules_path;
  std::string mask_token = "<|mdm_mask|>";
  auto* classify = app.add_subcommand("classify", "Structural vs lexical floating-token frequencies");
  classify->add_option("--dumps", dump_dirs)->required();
  classify->add_option("--rules", rules_path, "JSON rule file");
  classify->add_option("--mask-token", mask_token);

  bool depth = false;
  auto* qk = app.add_subcommand("qk", "QK score / norm / cosine decomposition");
  qk->add_option("--dump", dump_dir)->required();
  qk->add_option("--layer", layer);
  qk->add_option("--step", step);
  qk->add_option("--head", head, "Head (default: panel mean over heads)");
  qk->add_flag("--depth", depth, "Emit the contrast-vs-depth table instead of panels");

  std::size_t k = 1;
  auto* heads = app.add_subcommand("heads", "Retrieval-head scores");
  heads->add_option("--dump", dump_dir)->required();
  heads->add_option("--k", k)->check(CLI::PositiveNumber);

  double alpha = 0.5;
  std::string normalize = "column";
  bool token_level = false;
  auto* flow = app.add_subcommand("flow", "Residual-augmented attention rollout");
  flow->add_option("--dump", dump_dir)->required();
  flow->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  flow->add_option("--normalize", normalize)->check(CLI::IsMember({"column", "row"}));
  flow->add_option("--step", step, "Denoising step (default: average over steps)");
  flow->add_flag("--tokens", token_level, "Emit token-level R even when regions exist");

  std::vector<std::string> gold;
  auto* gold_shift = app.add_subcommand("gold-shift", "Does Answer-region flow follow the gold document?");
  gold_shift->add_option("--dumps", dump_dirs)->required();
  gold_shift->add_option("--gold", gold, "Gold region label per dump (default: region holding the needle)");
  gold_shift->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0));
  gold_shift->add_option("--normalize", normalize)->check(CLI::IsMember({"column", "row"}));

  auto* stress = app.add_subcommand("stress", "RAG stress plans and scoring");
  stress->require_subcommand(1);
  std::string base_path, kind = "noise", plan_path, pred_path;
  af::PlanParams params;
  bool per_variant = false;
  auto* build = stress->add_subcommand("build", "Build a stress plan");
  build->add_option("--base", base_path)->required();
  build->add_option("--kind", kind)->check(CLI::IsMember({"noise", "position", "integration"}));
  build->add_option("--counts", params.distractor_counts, "NOISE distractor counts");
  build->add_option("--indices", params.gold_indices, "POSITION gold indices (1-based)");
  build->add_option("--num-docs", params.num_docs, "POSITION context size");
  build->add_option("--perms", params.permutations, "INTEGRATION permutation count (0 = all)");
  auto* score = stress->add_subcommand("score", "Score predictions against a plan");
  score->add_option("--plan", plan_path)->required();
  score->add_option("--pred", pred_path)->required();
  score->add_flag("--per-variant", per_variant);

  std::string render_in, title, colormap = "sequential";
  std::vector<std::size_t> marks;
  auto* render = app.add_subcommand("render", "Render a matrix CSV as an SVG heatmap");
  render->add_option("--in", render_in)->required();
  render->add_option("--title", title);
  render->add_option("--colormap", colormap)->check(CLI::IsMember({"sequential", "diverging"}));
  render->add_option("--mark", marks, "Column indices to mark");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*validate) return run_validate(g, dump_dir);
    if (*stats) return run_stats(g, dump_dir, layer, step);
    if (*absorb) return run_absorb(g, dump_dir, set_mode);
    if (*drift) return run_drift(g, dump_dir, layer);
    if (*classify) return run_classify(g, dump_dirs, rules_path, mask_token);
    if (*qk) return run_qk(g, dump_dir, layer, step.value_or(0), head, depth);
    if (*heads) return run_heads(g, dump_dir, k);
    if (*flow) return run_flow(g, dump_dir, alpha, normalize, step, token_level);
    if (*gold_shift) return run_gold_shift(g, dump_dirs, gold, alpha, normalize);
    if (*build) return run_stress_build(g, base_path, kind, params);
    if (*score) return run_stress_score(g, plan_path, pred_path, per_variant);
    if (*render) return run_render(g, render_in, title, colormap, marks);
  } catch (const af::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

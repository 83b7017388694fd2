// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "attnfloat/attention_flow.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace attnfloat;
using namespace attnfloat::testing;

namespace {

double max_diff(const Matrix& a, const oracle::Grid& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  return worst;
}

oracle::Grid to_grid(const Matrix& m) {
  oracle::Grid g(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
  return g;
}

ErrorKind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::SchemaViolation;
}

}  // namespace

TEST_CASE("residual augmentation") {
  CHECK(residual_augment(Matrix::Identity(3, 3), 0.5).isApprox(Matrix::Identity(3, 3)));
  Matrix expected(2, 2);
  expected << 0.75, 0.25, 0.25, 0.75;
  CHECK((residual_augment(uniform_matrix(2), 0.5) - expected).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(1);
  for (double alpha : {0.0, 0.3, 1.0}) {
    const Matrix aug = residual_augment(random_stochastic(rng, 6), alpha);
    CHECK((aug.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  CHECK(error_kind([] { (void)residual_augment(Matrix::Identity(2, 2), 1.5); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("flow normalization") {
  SUBCASE("column-stochastic input is unchanged in COLUMN mode") {
    Matrix m(2, 2);
    m << 0.75, 0.25, 0.25, 0.75;
    CHECK((flow_normalize(m, NormalizeMode::Column) - m).cwiseAbs().maxCoeff() < 1e-15);
    Rng rng(2);
    const Matrix c = random_stochastic(rng, 5).transpose();
    CHECK((flow_normalize(c, NormalizeMode::Column) - c).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("column sums 2 and 0.5 become 1") {
    Matrix m(2, 2);
    m << 1.5, 0.1, 0.5, 0.4;
    const Matrix out = flow_normalize(m, NormalizeMode::Column);
    CHECK((out.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(out(0, 0) == doctest::Approx(0.75));
  }
  SUBCASE("ROW mode normalizes rows") {
    Matrix m(2, 2);
    m << 2.0, 2.0, 1.0, 3.0;
    const Matrix out = flow_normalize(m, NormalizeMode::Row);
    CHECK(out(1, 1) == doctest::Approx(0.75));
    CHECK((out.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero column names its index") {
    Matrix m = Matrix::Identity(3, 3);
    m(2, 2) = 0.0;
    try {
      (void)flow_normalize(m, NormalizeMode::Column);
      FAIL("expected ZeroNormSlice");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ZeroNormSlice);
      CHECK(std::string(e.what()).find('2') != std::string::npos);
    }
  }
  SUBCASE("mode names") {
    CHECK(parse_normalize_mode("column") == NormalizeMode::Column);
    CHECK(parse_normalize_mode("row") == NormalizeMode::Row);
    CHECK_THROWS_AS(parse_normalize_mode("diag"), Error);
  }
}

TEST_CASE("rollout") {
  SUBCASE("identity attention is a fixed point") {
    const auto r = rollout(std::vector<Matrix>(3, Matrix::Identity(5, 5)), RolloutConfig{});
    CHECK(r.layers_used == 3);
    CHECK((r.R - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("two hand-built layers match the oracle product") {
    Matrix a(3, 3), b(3, 3);
    a << 0.5, 0.3, 0.2, 0.1, 0.8, 0.1, 0.3, 0.3, 0.4;
    b << 1.0, 0.0, 0.0, 0.6, 0.4, 0.0, 0.2, 0.2, 0.6;
    for (const bool column : {true, false}) {
      RolloutConfig cfg;
      cfg.normalize_mode = column ? NormalizeMode::Column : NormalizeMode::Row;
      const auto r = rollout({a, b}, cfg);
      CHECK(max_diff(r.R, oracle::rollout({to_grid(a), to_grid(b)}, 0.5, column)) < 1e-10);
    }
  }
  SUBCASE("ROW mode keeps the product row-stochastic") {
    Rng rng(3);
    std::vector<Matrix> layers;
    for (int l = 0; l < 6; ++l) layers.push_back(random_stochastic(rng, 7, l % 2 == 0));
    RolloutConfig cfg;
    cfg.normalize_mode = NormalizeMode::Row;
    const auto r = rollout(layers, cfg);
    CHECK((r.R.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
    CHECK(r.R.minCoeff() >= 0.0);
  }
  SUBCASE("dump rollout uses head-averaged, step-averaged layers") {
    Rng rng(4);
    const AttentionDump d = random_dump(rng, Paradigm::MDM, 3, 2, 5, 2);
    std::vector<oracle::Grid> layers;
    for (std::size_t l = 0; l < 3; ++l) {
      auto s0 = oracle::head_mean_attention(d, l, 0), s1 = oracle::head_mean_attention(d, l, 1);
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) s0[i][j] = (s0[i][j] + s1[i][j]) / 2.0;
      layers.push_back(s0);
    }
    const auto r = rollout(d, 0, RolloutConfig{});
    CHECK(max_diff(r.R, oracle::rollout(layers, 0.5, true)) < 1e-10);

    RolloutConfig per_step;
    per_step.step_selection = StepSelection::PerStep;
    std::vector<oracle::Grid> step1;
    for (std::size_t l = 0; l < 3; ++l) step1.push_back(oracle::head_mean_attention(d, l, 1));
    CHECK(max_diff(rollout(d, 1, per_step).R, oracle::rollout(step1, 0.5, true)) < 1e-10);
  }
  SUBCASE("causal maps are fine in COLUMN mode thanks to the residual") {
    Rng rng(5);
    const AttentionDump d = random_dump(rng, Paradigm::ARM, 2, 1, 6, 1);
    CHECK_NOTHROW(rollout(d, 0, RolloutConfig{}));
    RolloutConfig no_residual;
    no_residual.alpha = 1.0;
    // A padded position that nobody attends to leaves an all-zero column.
    std::vector<Matrix> padded{Matrix::Identity(3, 3)};
    padded[0](2, 2) = 0.0;
    padded[0](2, 0) = 1.0;
    CHECK(error_kind([&] { (void)rollout(padded, no_residual); }) == ErrorKind::ZeroNormSlice);
  }
  SUBCASE("bit-reproducible") {
    Rng rng(6);
    std::vector<Matrix> layers;
    for (int l = 0; l < 4; ++l) layers.push_back(random_stochastic(rng, 8));
    CHECK(rollout(layers, RolloutConfig{}).R == rollout(layers, RolloutConfig{}).R);
  }
}

TEST_CASE("region flow") {
  SUBCASE("identity R over two width-2 regions") {
    const InfluenceMatrix inf{Matrix::Identity(4, 4), 1};
    const auto flow = region_flow(inf, {{"A", {0, 2}}, {"B", {2, 4}}});
    CHECK(flow.labels == std::vector<std::string>{"A", "B"});
    CHECK(flow.raw(0, 0) == 0.5);
    CHECK(flow.raw(0, 1) == 0.0);
    CHECK(flow.display.isApprox(Matrix::Identity(2, 2)));
  }
  SUBCASE("single region covering everything") {
    Rng rng(7);
    const InfluenceMatrix inf{random_stochastic(rng, 5), 1};
    const auto flow = region_flow(inf, {{"All", {0, 5}}});
    REQUIRE(flow.display.size() == 1);
    CHECK(flow.display(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("uniform R gives uniform display rows") {
    const InfluenceMatrix inf{uniform_matrix(6), 1};
    const auto flow = region_flow(inf, {{"A", {0, 1}}, {"B", {1, 4}}, {"C", {4, 6}}});
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j) CHECK(flow.display(i, j) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("block constants come back exactly") {
    const std::vector<RegionAnnotation> regions{{"A", {0, 2}}, {"B", {2, 5}}, {"C", {6, 7}}};
    Matrix c(3, 3);
    c << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9;
    Matrix r = Matrix::Constant(7, 7, 9.0);  // position 5 is outside every region
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q)
        for (auto i = regions[p].span.start; i < regions[p].span.end; ++i)
          for (auto j = regions[q].span.start; j < regions[q].span.end; ++j) r(i, j) = c(p, q);
    const auto flow = region_flow({r, 1}, regions);
    CHECK(flow.raw == c);
    CHECK((flow.display.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero rows stay zero on display") {
    Matrix r = Matrix::Zero(2, 2);
    r(1, 1) = 1.0;
    const auto flow = region_flow({r, 1}, {{"A", {0, 1}}, {"B", {1, 2}}});
    CHECK(flow.display.row(0).isZero());
  }
  SUBCASE("empty region") {
    CHECK(error_kind([] { (void)region_flow({Matrix::Identity(3, 3), 1}, {{"A", {1, 1}}}); }) ==
          ErrorKind::EmptyRegion);
  }
}

TEST_CASE("gold shift") {
  SUBCASE("MDM trio tracks the gold document") {
    std::vector<AttentionDump> trio;
    for (std::size_t g : {1, 5, 10}) trio.push_back(gold_shift_fixture(Paradigm::MDM, g));
    CHECK(gold_region_label(trio[1]) == "Doc5");
    const auto report = gold_shift_report(trio, {});
    CHECK(report.verdict == GoldShiftVerdict::Tracking);
    CHECK(to_string(report.verdict) == "tracking");
    REQUIRE(report.entries.size() == 3);
    CHECK(report.entries[0].peak_label == "Doc1");
    CHECK(report.entries[1].peak_label == "Doc5");
    CHECK(report.entries[2].peak_label == "Doc10");
  }
  SUBCASE("ARM trio sinks into BOS") {
    std::vector<AttentionDump> trio;
    for (std::size_t g : {1, 5, 10}) trio.push_back(gold_shift_fixture(Paradigm::ARM, g));
    const auto report = gold_shift_report(trio, {});
    CHECK(report.verdict == GoldShiftVerdict::Sunk);
    CHECK(to_string(report.verdict) == "sunk");
    for (const auto& e : report.entries) CHECK(e.peak_label == "BOS");
  }
  SUBCASE("identical dumps are reported, not rejected") {
    const auto d = gold_shift_fixture(Paradigm::MDM, 5);
    const auto report = gold_shift_report({d, d, d}, {});
    CHECK(report.verdict == GoldShiftVerdict::NoVariation);
    CHECK(to_string(report.verdict) == "no variation");
  }
  SUBCASE("explicit labels override the needle") {
    std::vector<AttentionDump> trio;
    for (std::size_t g : {1, 5, 10}) trio.push_back(gold_shift_fixture(Paradigm::MDM, g));
    const auto report = gold_shift_report(trio, {"Doc2", "Doc5", "Doc10"});
    CHECK(report.verdict == GoldShiftVerdict::Mixed);
  }
  SUBCASE("missing labels") {
    AttentionDump d = gold_shift_fixture(Paradigm::MDM, 1);
    d.regions.pop_back();  // drop Answer
    CHECK(error_kind([&] { (void)gold_shift_report({d}, {}); }) == ErrorKind::MissingRegionLabels);
    AttentionDump e = gold_shift_fixture(Paradigm::MDM, 1);
    e.needle.reset();
    CHECK(error_kind([&] { (void)gold_shift_report({e}, {}); }) == ErrorKind::MissingRegionLabels);
    CHECK(error_kind([&] { (void)gold_shift_report({e}, {"Doc11"}); }) == ErrorKind::MissingRegionLabels);
  }
}

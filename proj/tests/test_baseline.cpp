#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "core/baseline.hpp"
#include "core/metrics.hpp"
#include "core/optimizer.hpp"
#include "core/testkit.hpp"
#include "helpers.hpp"

using namespace fairdecide;
using fairdecide::test::inst;

TEST_CASE("point mass lands in one bin with the label-free base rate") {
  Instances data;
  for (int i = 0; i < 10; ++i) data.push_back(inst("i" + std::to_string(i), "g", {}, {}, 0.5, 0.5));
  auto b = baseline::estimate(data, "g", 10);
  CHECK(b.mass[5] == doctest::Approx(1.0));
  CHECK(b.base_rate == doctest::Approx(0.5));
  CHECK(b.base_rate_source == BaseRateSource::CalibratedScores);
  CHECK(b.count == 10);
}

TEST_CASE("base rate prefers labels when present") {
  Instances data{inst("a", "g", {}, 1, 0.5, 0.9), inst("b", "g", {}, 0, 0.5, 0.9),
                 inst("c", "g", {}, 1, 0.5, 0.9), inst("d", "g", {}, 1, 0.5, 0.9)};
  auto b = baseline::estimate(data, "g", 10);
  CHECK(b.base_rate == doctest::Approx(0.75));
  CHECK(b.base_rate_source == BaseRateSource::Labels);
}

TEST_CASE("label coverage below 90 percent falls back to scores") {
  Instances data;
  for (int i = 0; i < 100; ++i) {
    auto x = inst("i" + std::to_string(i), "g", {}, {}, 0.5, 0.3);
    if (i < 89) x.outcome = 1;
    data.push_back(x);
  }
  CHECK(baseline::estimate(data, "g", 10).base_rate_source == BaseRateSource::CalibratedScores);
  data[89].outcome = 1;
  CHECK(baseline::estimate(data, "g", 10).base_rate_source == BaseRateSource::Labels);
}

TEST_CASE("uniform probability comb spreads mass evenly") {
  Instances data;
  for (int i = 0; i < 10; ++i)
    data.push_back(inst("i" + std::to_string(i), "g", {}, {}, 0.5, 0.05 + 0.1 * i));
  auto b = baseline::estimate(data, "g", 10);
  for (double m : b.mass) CHECK(m == doctest::Approx(0.1));
}

TEST_CASE("estimation errors") {
  Instances data{inst("a", "g", {}, {}, 0.5, 0.5)};
  CHECK_THROWS_AS(baseline::estimate(data, "other", 10), FdError);
  Instances uncal{inst("a", "g", {}, {}, 0.5)};
  CHECK_THROWS_AS(baseline::estimate(uncal, "g", 10), FdError);
}

TEST_CASE("mass always sums to one") {
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int round = 0; round < 20; ++round) {
    Instances data;
    const int n = 1 + static_cast<int>(gen() % 200);
    for (int i = 0; i < n; ++i) {
      auto x = inst("i" + std::to_string(i), "g", {}, {}, 0.5);
      x.calibrated_p = unif(gen);
      data.push_back(x);
    }
    auto b = baseline::estimate(data, "g", 1 + static_cast<int>(gen() % 150));
    double total = 0.0;
    for (double m : b.mass) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("expected rate curves at the extremes") {
  Instances data;
  std::mt19937 gen(29);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double p_sum = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto x = inst("i" + std::to_string(i), "g", {}, {}, 0.5);
    x.calibrated_p = unif(gen);
    p_sum += *x.calibrated_p;
    data.push_back(x);
  }
  auto b = baseline::estimate(data, "g", 100);

  auto all = baseline::expected_rate_curves(b, 0.0, Direction::AcceptAbove);
  CHECK(all.acceptance == doctest::Approx(1.0));
  CHECK(*all.tpr == doctest::Approx(1.0));
  CHECK(*all.fpr == doctest::Approx(1.0));
  CHECK(*all.ppv == doctest::Approx(p_sum / 500).epsilon(0.01));  // bin-midpoint slack
  CHECK_FALSE(all.for_rate.has_value());

  auto none = baseline::expected_rate_curves(b, 1.5, Direction::AcceptAbove);
  CHECK(none.acceptance == doctest::Approx(0.0));
  CHECK(*none.tpr == doctest::Approx(0.0));
  CHECK(*none.fpr == doctest::Approx(0.0));
  CHECK_FALSE(none.ppv.has_value());
  CHECK(*none.for_rate == doctest::Approx(p_sum / 500).epsilon(0.01));
}

TEST_CASE("point mass curve") {
  Instances data;
  for (int i = 0; i < 10; ++i) data.push_back(inst("i" + std::to_string(i), "g", {}, {}, 0.5, 0.5));
  auto b = baseline::estimate(data, "g", 100);
  auto pt = baseline::expected_rate_curves(b, 0.4, Direction::AcceptAbove);
  CHECK(pt.acceptance == doctest::Approx(1.0));
  CHECK(*pt.ppv == doctest::Approx(0.5).epsilon(0.02));  // midpoint of the [0.5, 0.51) bin
}

TEST_CASE("curve monotonicity in tau for accept-above") {
  SyntheticSpec spec;
  spec.seed = 31;
  spec.groups = {{"g", 5000, 2.0, 2.0, 1.0}};
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  auto b = baseline::estimate(pop, "g", 100);

  double prev_acc = 2.0, prev_tpr = 2.0, prev_fpr = 2.0, prev_ppv = -1.0;
  for (int k = 0; k <= 50; ++k) {
    const double tau = k / 50.0;
    auto pt = baseline::expected_rate_curves(b, tau, Direction::AcceptAbove);
    CHECK(pt.acceptance <= prev_acc + 1e-12);
    if (pt.tpr) {
      CHECK(*pt.tpr <= prev_tpr + 1e-12);
      prev_tpr = *pt.tpr;
    }
    if (pt.fpr) {
      CHECK(*pt.fpr <= prev_fpr + 1e-12);
      prev_fpr = *pt.fpr;
    }
    if (pt.ppv) {
      CHECK(*pt.ppv >= prev_ppv - 1e-12);
      prev_ppv = *pt.ppv;
    }
    prev_acc = pt.acceptance;
  }
}

TEST_CASE("curves match the empirical audit within discretization slack") {
  SyntheticSpec spec;
  spec.seed = 37;
  spec.groups = {{"g", 20000, 2.5, 2.0, 1.0}};
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  auto b = baseline::estimate(pop, "g", 100);

  for (double tau : {0.25, 0.5, 0.75}) {
    DecisionRule rule;
    rule.per_group["g"] = {Direction::AcceptAbove, tau, tau, 0.0};
    Instances decided = optimizer::apply_rule(rule, pop, 1);
    const auto rates = metrics::acceptance_rates(decided);
    auto pt = baseline::expected_rate_curves(b, tau, Direction::AcceptAbove);
    // boundary-bin mass plus sampling noise
    CHECK(std::fabs(pt.acceptance - rates.at("g")) < 0.03);
    auto report = metrics::audit(decided, {Criterion::Independence, 1.0, {}});
    CHECK(std::fabs(*pt.tpr - *report.per_group.at("g").tpr) < 0.04);
    CHECK(std::fabs(*pt.ppv - *report.per_group.at("g").ppv) < 0.04);
  }
}

TEST_CASE("stratified estimation fills cells with consistent weights") {
  std::mt19937 gen(41);
  Instances data = test::random_population(gen, 200, 2, true, true);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (auto& x : data) x.calibrated_p = unif(gen);
  auto set = baseline::estimate_set(data, 20, {}, true);
  double cell_total = 0.0;
  for (const auto& [stratum, cells] : set.strata)
    for (const auto& [g, cell] : cells) cell_total += cell.weight;
  CHECK(cell_total == doctest::Approx(1.0));
  double group_total = 0.0;
  for (const auto& [g, w] : set.group_weights) group_total += w;
  CHECK(group_total == doctest::Approx(1.0));
}

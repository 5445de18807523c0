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
using fairdecide::test::baseline_of;
using fairdecide::test::inst;

namespace {

BaselineSet two_group_set(unsigned seed, double a0 = 4.0, double b0 = 2.0, double a1 = 2.0,
                          double b1 = 3.0, int n = 5000) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.groups = {{"g0", n, a0, b0, 1.0}, {"g1", n, a1, b1, 1.0}};
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  return baseline::estimate_set(pop, 100);
}

BaselineSet single_point_mass(double p, double base_rate) {
  BaselineSet set;
  set.per_group["g"] = baseline_of("g", {{p, 1.0}}, base_rate);
  set.group_weights["g"] = 1.0;
  return set;
}

DecisionRule uniform_rule(const BaselineSet& set, double tau) {
  DecisionRule rule;
  for (const auto& [g, _] : set.per_group) rule.per_group[g] = {Direction::AcceptAbove, tau, tau, 0.0};
  return rule;
}

}  // namespace

TEST_CASE("evaluate_utility closed cases") {
  auto set = single_point_mass(0.8, 0.8);

  SUBCASE("reject-all pays the outside option") {
    auto rule = uniform_rule(set, 1.0);
    rule.per_group["g"].tau_lo = rule.per_group["g"].tau_hi = 1.0;
    // point mass sits in the top bin (midpoint 0.805 < 1)
    CHECK(optimizer::evaluate_utility(rule, set, {1.0, 1.0, 0.25}) == doctest::Approx(0.25));
  }
  SUBCASE("accept-all with alpha only returns the mean probability") {
    auto rule = uniform_rule(set, 0.0);
    CHECK(optimizer::evaluate_utility(rule, set, {1.0, 0.0, 0.0}) ==
          doctest::Approx(0.805));  // bin midpoint of the 0.8 mass
  }
  SUBCASE("point mass at 0.8 under symmetric utilities") {
    auto rule = uniform_rule(set, 0.0);
    // p*alpha - (1-p)*beta at the bin midpoint
    CHECK(optimizer::evaluate_utility(rule, set, {1.0, 1.0, 0.0}) ==
          doctest::Approx(0.805 - 0.195));
  }
  SUBCASE("group mismatch raises") {
    DecisionRule rule;
    rule.per_group["other"] = {Direction::AcceptAbove, 0.5, 0.5, 0.0};
    CHECK_THROWS_AS(optimizer::evaluate_utility(rule, set, {1.0, 1.0, 0.0}), FdError);
  }
}

TEST_CASE("closed-form threshold") {
  CHECK(optimizer::optimal_unconstrained_threshold({1.0, 1.0, 0.0}) == doctest::Approx(0.5));
  CHECK(optimizer::optimal_unconstrained_threshold({3.0, 1.0, 0.0}) == doctest::Approx(0.25));
  CHECK(optimizer::optimal_unconstrained_threshold({1.0, 1.0, 1.0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(optimizer::optimal_unconstrained_threshold({1.0, -1.0, 0.0}), FdError);
  CHECK_THROWS_AS(optimizer::optimal_unconstrained_threshold({-2.0, 1.0, 0.0}), FdError);
}

TEST_CASE("threshold identity and grid dominance over random utilities") {
  std::mt19937 gen(43);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  auto set = two_group_set(43);
  for (int round = 0; round < 200; ++round) {
    UtilityParams u{unif(gen), unif(gen), unif(gen)};
    if (u.alpha + u.beta <= 0.01) continue;
    const double tau = optimizer::optimal_unconstrained_threshold(u);
    CHECK(std::fabs(tau - (u.beta + u.gamma) / (u.alpha + u.beta)) <= 1e-12);

    auto result = optimizer::optimize_unconstrained(set, u);
    const double best = result.expected_utility_per_capita;
    for (int k = 0; k <= 100; ++k) {
      const double grid_util = optimizer::evaluate_utility(uniform_rule(set, k / 100.0), set, u);
      CHECK(grid_util <= best + 1e-9 * std::max(1.0, std::fabs(best)));
    }
  }
}

TEST_CASE("unconstrained optimum dominates the trivial rules") {
  auto set = two_group_set(47);
  UtilityParams u{1.0, 1.0, 0.1};
  auto result = optimizer::optimize_unconstrained(set, u);
  CHECK(result.expected_utility_per_capita >=
        optimizer::evaluate_utility(uniform_rule(set, 0.0), set, u) - 1e-12);
  CHECK(result.expected_utility_per_capita >=
        optimizer::evaluate_utility(uniform_rule(set, 1.0), set, u) - 1e-12);
  for (const auto& [g, r] : result.rule.per_group) CHECK(r.tau_hi == doctest::Approx(0.55));
}

TEST_CASE("identical baselines make every constraint non-binding") {
  SyntheticSpec spec;
  spec.seed = 53;
  spec.groups = {{"g0", 4000, 3.0, 2.0, 1.0}, {"g1", 4000, 3.0, 2.0, 1.0}};
  // same shapes, different draws; force identical histograms by reusing g0
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  auto set = baseline::estimate_set(pop, 100);
  set.per_group["g1"].mass = set.per_group["g0"].mass;
  set.per_group["g1"].base_rate = set.per_group["g0"].base_rate;

  UtilityParams u{1.0, 1.0, 0.1};
  const double tau = optimizer::optimal_unconstrained_threshold(u);
  for (Criterion c : {Criterion::Independence, Criterion::EqualOpportunity,
                      Criterion::EqualizedOdds, Criterion::PredictiveParity,
                      Criterion::Sufficiency}) {
    auto result = optimizer::optimize_constrained(set, u, {c, 0.01, {}}, 0.01);
    CHECK(result.search_trace.method == "unconstrained-feasible");
    for (const auto& [g, r] : result.rule.per_group) {
      CHECK(r.tau_hi == doctest::Approx(tau));
      CHECK(r.tau_lo == doctest::Approx(tau));
    }
    for (const auto& [comp, gap] : result.achieved_gaps) CHECK(gap <= 1e-9);
    for (const auto& [comp, bind] : result.binding) CHECK_FALSE(bind);
  }
}

TEST_CASE("vacuous epsilon returns the unconstrained rule") {
  auto set = two_group_set(59);
  UtilityParams u{1.0, 1.0, 0.1};
  auto unc = optimizer::optimize_unconstrained(set, u);
  for (Criterion c : {Criterion::Independence, Criterion::EqualizedOdds,
                      Criterion::PredictiveParity, Criterion::FORParity}) {
    auto result = optimizer::optimize_constrained(set, u, {c, 1.0, {}}, 0.005);
    CHECK(result.search_trace.method == "unconstrained-feasible");
    for (const auto& [g, r] : result.rule.per_group) {
      CHECK(r.tau_hi == unc.rule.per_group.at(g).tau_hi);
      CHECK(r.tau_lo == unc.rule.per_group.at(g).tau_lo);
    }
    CHECK(result.expected_utility_per_capita ==
          doctest::Approx(unc.expected_utility_per_capita).epsilon(1e-12));
  }
}

TEST_CASE("constrained utility never beats unconstrained and grows with epsilon") {
  auto set = two_group_set(61);
  UtilityParams u{1.0, 1.0, 0.1};
  const double unc = optimizer::optimize_unconstrained(set, u).expected_utility_per_capita;
  for (Criterion c : {Criterion::Independence, Criterion::EqualOpportunity,
                      Criterion::EqualizedOdds, Criterion::PredictiveParity,
                      Criterion::Sufficiency}) {
    double prev = -1e300;
    for (double eps : {0.0, 0.01, 0.05, 0.1, 1.0}) {
      double value;
      try {
        value = optimizer::optimize_constrained(set, u, {c, eps, {}}, 0.01)
                    .expected_utility_per_capita;
      } catch (const FdError& e) {
        REQUIRE(e.code() == Errc::Infeasible);
        value = -1e300;
      }
      CHECK(value <= unc + 1e-9);
      CHECK(value >= prev - 1e-9);
      prev = value;
    }
  }
}

TEST_CASE("achieved gaps respect epsilon plus one grid step") {
  auto set = two_group_set(67);
  UtilityParams u{1.0, 1.0, 0.1};
  for (Criterion c : {Criterion::Independence, Criterion::EqualOpportunity,
                      Criterion::PredictiveEquality, Criterion::EqualizedOdds,
                      Criterion::PredictiveParity, Criterion::FORParity, Criterion::Sufficiency}) {
    auto result = optimizer::optimize_constrained(set, u, {c, 0.02, {}}, 0.005);
    for (const auto& [comp, gap] : result.achieved_gaps) {
      INFO(criterion_name(c), " component ", comp);
      CHECK(gap <= (c == Criterion::PredictiveParity || c == Criterion::FORParity ? 0.04 : 0.02) +
                       0.005 + 1e-9);
    }
  }
}

TEST_CASE("positive scaling of utilities leaves the argmax rule unchanged") {
  auto set = two_group_set(71);
  UtilityParams u{1.0, 1.5, 0.125};
  UtilityParams u2{2.0, 3.0, 0.25};  // exact power-of-two scaling
  for (Criterion c : {Criterion::Independence, Criterion::EqualizedOdds,
                      Criterion::PredictiveParity}) {
    auto r1 = optimizer::optimize_constrained(set, u, {c, 0.01, {}}, 0.01);
    auto r2 = optimizer::optimize_constrained(set, u2, {c, 0.01, {}}, 0.01);
    for (const auto& [g, rule] : r1.rule.per_group) {
      CHECK(rule.tau_hi == r2.rule.per_group.at(g).tau_hi);
      CHECK(rule.tau_lo == r2.rule.per_group.at(g).tau_lo);
      CHECK(rule.mix == r2.rule.per_group.at(g).mix);
    }
    CHECK(r2.expected_utility_per_capita ==
          doctest::Approx(2.0 * r1.expected_utility_per_capita).epsilon(1e-12));
  }
}

TEST_CASE("target-value direction law") {
  auto set = two_group_set(73, 4.0, 2.0, 2.0, 4.0);
  UtilityParams u{1.0, 1.0, 0.1};
  auto result = optimizer::optimize_constrained(set, u, {Criterion::PredictiveParity, 0.01, {}},
                                                0.005);
  REQUIRE(result.target_value.has_value());
  const double v = *result.target_value;
  for (const auto& [g, r] : result.rule.per_group) {
    const double br = set.per_group.at(g).base_rate;
    if (v > br + 1e-12) CHECK(r.direction == Direction::AcceptAbove);
    if (v < br - 1e-12) CHECK(r.direction == Direction::AcceptBelow);
  }
}

TEST_CASE("conditional statistical parity with stratum-refined baselines") {
  std::mt19937 gen(79);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Instances pop;
  for (int i = 0; i < 8000; ++i) {
    const bool g1 = i % 2 == 1;
    const std::string stratum = (i / 2) % 2 ? "high" : "low";
    double p = unif(gen);
    if (g1) p = p * p;  // group 1 skews low
    if (stratum == "high") p = 0.3 + 0.7 * p;
    auto x = inst("i" + std::to_string(i), g1 ? "g1" : "g0", {}, unif(gen) < p, p, p);
    x.stratum = stratum;
    pop.push_back(x);
  }
  auto set = baseline::estimate_set(pop, 100, {}, true);
  UtilityParams u{1.0, 1.0, 0.1};
  FairnessConstraint fc{Criterion::ConditionalStatisticalParity, 0.02, {"low", "high"}};
  auto result = optimizer::optimize_constrained(set, u, fc, 0.01);
  CHECK(result.achieved_gaps.at("conditional_statistical_parity") <= 0.02 + 1e-9);

  auto oracle = testkit::brute_force_optimum(set, u, fc, 0.01);
  CHECK(result.expected_utility_per_capita ==
        doctest::Approx(oracle.expected_utility_per_capita).epsilon(1e-9));

  BaselineSet no_strata = set;
  no_strata.strata.clear();
  CHECK_THROWS_AS(optimizer::optimize_constrained(no_strata, u, fc, 0.01), FdError);
}

TEST_CASE("apply_rule semantics") {
  DecisionRule rule;
  rule.per_group["g"] = {Direction::AcceptAbove, 0.5, 0.5, 0.0};

  SUBCASE("deterministic accept above") {
    Instances data{inst("a", "g", {}, {}, 0.7, 0.7)};
    CHECK(*optimizer::apply_rule(rule, data, 1)[0].decision == 1);
    data[0].calibrated_p = 0.5;
    CHECK(*optimizer::apply_rule(rule, data, 1)[0].decision == 1);  // accept on equality
    data[0].calibrated_p = 0.49;
    CHECK(*optimizer::apply_rule(rule, data, 1)[0].decision == 0);
  }
  SUBCASE("accept-below mirrors") {
    rule.per_group["g"] = {Direction::AcceptBelow, 0.5, 0.5, 0.0};
    Instances data{inst("a", "g", {}, {}, 0.3, 0.3)};
    CHECK(*optimizer::apply_rule(rule, data, 1)[0].decision == 1);
    data[0].calibrated_p = 0.51;
    CHECK(*optimizer::apply_rule(rule, data, 1)[0].decision == 0);
  }
  SUBCASE("zero mix rejects the whole band") {
    rule.per_group["g"] = {Direction::AcceptAbove, 0.2, 0.8, 0.0};
    Instances data{inst("a", "g", {}, {}, 0.5, 0.5)};
    CHECK(*optimizer::apply_rule(rule, data, 9)[0].decision == 0);
  }
  SUBCASE("band acceptance matches mix on a large sample") {
    rule.per_group["g"] = {Direction::AcceptAbove, 0.2, 0.8, 0.5};
    Instances data;
    for (int i = 0; i < 10000; ++i) data.push_back(inst("i" + std::to_string(i), "g", {}, {}, 0.5, 0.5));
    auto decided = optimizer::apply_rule(rule, data, 12345);
    double rate = 0;
    for (const auto& x : decided) rate += *x.decision;
    rate /= 10000;
    CHECK(rate == doctest::Approx(0.5).epsilon(0.04));

    auto again = optimizer::apply_rule(rule, data, 12345);
    for (std::size_t i = 0; i < decided.size(); ++i) CHECK(*again[i].decision == *decided[i].decision);
    auto other_seed = optimizer::apply_rule(rule, data, 999);
    int diff = 0;
    for (std::size_t i = 0; i < decided.size(); ++i)
      diff += *other_seed[i].decision != *decided[i].decision;
    CHECK(diff > 1000);
  }
  SUBCASE("errors") {
    Instances uncal{inst("a", "g", {}, {}, 0.7)};
    CHECK_THROWS_AS(optimizer::apply_rule(rule, uncal, 1), FdError);
    Instances unknown{inst("a", "zz", {}, {}, 0.7, 0.7)};
    CHECK_THROWS_AS(optimizer::apply_rule(rule, unknown, 1), FdError);
  }
}

TEST_CASE("achieved gaps reproduce under the empirical audit") {
  SyntheticSpec spec;
  spec.seed = 83;
  spec.groups = {{"g0", 10000, 4.0, 2.0, 1.0}, {"g1", 10000, 2.0, 3.0, 1.0}};
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  auto set = baseline::estimate_set(pop, 100);
  UtilityParams u{1.0, 1.0, 0.1};

  auto result = optimizer::optimize_constrained(set, u, {Criterion::Independence, 0.01, {}}, 0.005);
  Instances decided = optimizer::apply_rule(result.rule, pop, 7);
  const double empirical = metrics::independence_gap(decided);
  // one bin width plus sampling slack
  CHECK(std::fabs(empirical - result.achieved_gaps.at("independence")) < 0.01 + 0.05);

  // randomized family: the applied band decisions reproduce both separation
  // gaps up to the same slack
  auto eq = optimizer::optimize_constrained(set, u, {Criterion::EqualizedOdds, 0.01, {}}, 0.005);
  Instances eq_decided = optimizer::apply_rule(eq.rule, pop, 11);
  auto gaps = metrics::separation_gaps(eq_decided);
  CHECK(std::fabs(*gaps.tpr_gap - eq.achieved_gaps.at("tpr")) < 0.01 + 0.05);
  CHECK(std::fabs(*gaps.fpr_gap - eq.achieved_gaps.at("fpr")) < 0.01 + 0.05);
}

TEST_CASE("three-group oracle equivalence") {
  SyntheticSpec spec;
  spec.seed = 89;
  spec.groups = {{"g0", 3000, 3.0, 2.0, 1.0},
                 {"g1", 3000, 2.0, 2.5, 1.0},
                 {"g2", 3000, 2.5, 2.5, 1.0}};
  Instances pop = testkit::generate_population(spec);
  for (auto& x : pop) x.calibrated_p = x.raw_score;
  auto set = baseline::estimate_set(pop, 100);
  UtilityParams u{1.0, 1.0, 0.1};

  // deterministic criteria at a fine grid, randomized families at a coarse one
  for (auto [c, resolution] :
       {std::pair{Criterion::Independence, 0.01}, {Criterion::EqualOpportunity, 0.01},
        {Criterion::PredictiveParity, 0.005}, {Criterion::EqualizedOdds, 0.02},
        {Criterion::Sufficiency, 0.02}}) {
    INFO(criterion_name(c));
    FairnessConstraint fc{c, 0.02, {}};
    bool main_ok = true, oracle_ok = true;
    double mu = 0, ou = 0;
    try {
      mu = optimizer::optimize_constrained(set, u, fc, resolution).expected_utility_per_capita;
    } catch (const FdError& e) {
      REQUIRE(e.code() == Errc::Infeasible);
      main_ok = false;
    }
    try {
      ou = testkit::brute_force_optimum(set, u, fc, resolution).expected_utility_per_capita;
    } catch (const FdError& e) {
      REQUIRE(e.code() == Errc::Infeasible);
      oracle_ok = false;
    }
    REQUIRE(main_ok == oracle_ok);
    if (main_ok) CHECK(mu == doctest::Approx(ou).epsilon(1e-9));
  }
}

TEST_CASE("oracle equivalence holds for a non-integral grid divisor") {
  auto set = two_group_set(97);
  UtilityParams u{1.0, 1.0, 0.1};
  for (Criterion c : {Criterion::Independence, Criterion::EqualizedOdds,
                      Criterion::PredictiveParity}) {
    INFO(criterion_name(c));
    FairnessConstraint fc{c, 0.02, {}};
    const double mu =
        optimizer::optimize_constrained(set, u, fc, 0.003).expected_utility_per_capita;
    const double ou =
        testkit::brute_force_optimum(set, u, fc, 0.003).expected_utility_per_capita;
    CHECK(mu == doctest::Approx(ou).epsilon(1e-9));
  }
}

TEST_CASE("infeasible target values raise Infeasible") {
  // both groups concentrated at distinct probabilities make most PPV targets
  // unreachable within a tight epsilon
  BaselineSet set;
  set.per_group["g0"] = baseline_of("g0", {{0.905, 1.0}}, 0.2);
  set.per_group["g1"] = baseline_of("g1", {{0.305, 1.0}}, 0.2);
  set.group_weights["g0"] = 0.5;
  set.group_weights["g1"] = 0.5;
  UtilityParams u{1.0, 1.0, 0.0};
  CHECK_THROWS_AS(optimizer::optimize_constrained(
                      set, u, {Criterion::PredictiveParity, 0.01, {}}, 0.005),
                  FdError);
}

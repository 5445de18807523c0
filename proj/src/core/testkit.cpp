#include "core/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "core/rng.hpp"

namespace fairdecide::testkit {

namespace {

constexpr double kSlack = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Instances generate_population(const SyntheticSpec& spec) {
  spec.check();
  Instances out;
  for (const auto& g : spec.groups) {
    rng::Stream stream(rng::stage_seed(spec.seed, "population/" + g.name));
    for (std::int64_t i = 0; i < g.size; ++i) {
      const double p = stream.beta(g.beta_a, g.beta_b);
      const int y = stream.uniform() < p ? 1 : 0;
      LabeledInstance x;
      x.id = g.name + "-" + std::to_string(i);
      x.group = g.name;
      x.raw_score = g.distortion_power == 1.0 ? p : std::pow(p, g.distortion_power);
      x.outcome = y;
      out.push_back(std::move(x));
    }
  }
  return out;
}

OracleGaps brute_force_metrics(const Instances& instances, const std::vector<std::string>& strata) {
  OracleGaps out;
  std::set<std::string> groups;
  for (const auto& x : instances) groups.insert(x.group);

  auto count_if = [&](const std::string& g, auto pred) {
    std::int64_t c = 0;
    for (const auto& x : instances)
      if (x.group == g && pred(x)) ++c;
    return c;
  };

  for (const auto& g : groups) {
    OracleRates r;
    const std::int64_t n = count_if(g, [](const auto&) { return true; });
    const std::int64_t d1 = count_if(g, [](const auto& x) { return x.decision && *x.decision == 1; });
    if (n > 0) r.acceptance = static_cast<double>(d1) / static_cast<double>(n);

    const std::int64_t y1 = count_if(g, [](const auto& x) { return x.outcome && *x.outcome == 1; });
    const std::int64_t y0 = count_if(g, [](const auto& x) { return x.outcome && *x.outcome == 0; });
    const std::int64_t y1d1 =
        count_if(g, [](const auto& x) { return x.outcome && *x.outcome == 1 && x.decision && *x.decision == 1; });
    const std::int64_t y0d1 =
        count_if(g, [](const auto& x) { return x.outcome && *x.outcome == 0 && x.decision && *x.decision == 1; });
    const std::int64_t y1d0 =
        count_if(g, [](const auto& x) { return x.outcome && *x.outcome == 1 && x.decision && *x.decision == 0; });
    const std::int64_t dec1 = y1d1 + y0d1;
    const std::int64_t dec0 = (y1 + y0) - dec1;

    if (y1 + y0 > 0) r.base_rate = static_cast<double>(y1) / static_cast<double>(y1 + y0);
    if (y1 > 0)
      r.tpr = static_cast<double>(y1d1) / static_cast<double>(y1);
    else
      out.undefined.push_back(g + "/tpr");
    if (y0 > 0)
      r.fpr = static_cast<double>(y0d1) / static_cast<double>(y0);
    else
      out.undefined.push_back(g + "/fpr");
    if (dec1 > 0)
      r.ppv = static_cast<double>(y1d1) / static_cast<double>(dec1);
    else
      out.undefined.push_back(g + "/ppv");
    if (dec0 > 0)
      r.for_rate = static_cast<double>(y1d0) / static_cast<double>(dec0);
    else
      out.undefined.push_back(g + "/for");
    out.per_group[g] = r;
  }

  auto gap_of = [&](auto getter) -> std::optional<double> {
    std::vector<double> vals;
    for (const auto& [g, r] : out.per_group) {
      auto v = getter(r);
      if (v) vals.push_back(*v);
    }
    if (vals.empty()) return std::nullopt;
    double gap = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = i + 1; j < vals.size(); ++j)
        gap = std::max(gap, std::fabs(vals[i] - vals[j]));
    return gap;
  };
  out.gaps["independence"] = gap_of([](const OracleRates& r) { return r.acceptance; });
  out.gaps["tpr"] = gap_of([](const OracleRates& r) { return r.tpr; });
  out.gaps["fpr"] = gap_of([](const OracleRates& r) { return r.fpr; });
  out.gaps["ppv"] = gap_of([](const OracleRates& r) { return r.ppv; });
  out.gaps["for"] = gap_of([](const OracleRates& r) { return r.for_rate; });

  if (!strata.empty()) {
    double gap = 0.0;
    bool any = false;
    for (const auto& l : strata) {
      std::vector<double> rates;
      for (const auto& g : groups) {
        std::int64_t n = 0, d1 = 0;
        for (const auto& x : instances) {
          if (x.group != g || !x.stratum || *x.stratum != l) continue;
          ++n;
          if (x.decision && *x.decision == 1) ++d1;
        }
        if (n == 0) {
          out.undefined.push_back(g + "/acceptance@" + l);
          continue;
        }
        rates.push_back(static_cast<double>(d1) / static_cast<double>(n));
      }
      for (std::size_t i = 0; i < rates.size(); ++i)
        for (std::size_t j = i + 1; j < rates.size(); ++j) {
          gap = std::max(gap, std::fabs(rates[i] - rates[j]));
          any = true;
        }
    }
    out.gaps["conditional_statistical_parity"] = any ? std::optional<double>(gap) : std::nullopt;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force constrained optimum. Re-derives everything from the baselines
// with its own loops; only the constraint-rate arithmetic convention (see
// optimizer.cpp) is intentionally identical.
// ---------------------------------------------------------------------------

namespace {

struct Prep {
  std::string group;
  double weight = 0.0;
  const BaselineDistribution* dist = nullptr;
  double tp_total = 0.0, fp_total = 0.0;
  std::vector<double> acc_up, tp_up, fp_up, util_up;
  std::vector<double> acc_dn, tp_dn, util_dn;
};

struct Pick {
  Direction dir = Direction::AcceptAbove;
  int k_lo = 0, k_hi = 0, jm = 0;
};

struct OracleBest {
  bool found = false;
  double util = kNegInf;
  std::vector<Pick> picks;
  double target = 0.0;
  std::vector<double> key;
};

// Direction law shared with the optimizer: a PPV target above the base rate
// needs accept-above; a FOR target above the base rate needs accept-below
// (accept-above rules keep the false omission rate below the base rate).
Direction target_direction_of(bool ppv_target, double v, double base_rate) {
  if (std::fabs(v - base_rate) <= kSlack) return Direction::AcceptAbove;
  const bool above = v > base_rate;
  if (ppv_target) return above ? Direction::AcceptAbove : Direction::AcceptBelow;
  return above ? Direction::AcceptBelow : Direction::AcceptAbove;
}

double rule_utility_direct(const Prep& p, const GroupRule& r, const UtilityParams& u) {
  double total = 0.0;
  const auto& d = *p.dist;
  for (std::size_t b = 0; b < d.bins(); ++b) {
    const double m = d.midpoint(b);
    double q;
    if (r.direction == Direction::AcceptAbove)
      q = m >= r.tau_hi ? 1.0 : (m < r.tau_lo ? 0.0 : r.mix);
    else
      q = m <= r.tau_lo ? 1.0 : (m > r.tau_hi ? 0.0 : r.mix);
    total += d.mass[b] * (q * (m * u.alpha - (1.0 - m) * u.beta) + (1.0 - q) * u.gamma);
  }
  return total;
}

GroupRule pick_to_rule(const Pick& pk, int n) {
  GroupRule r;
  r.direction = pk.dir;
  r.tau_lo = static_cast<double>(pk.k_lo) / n;
  r.tau_hi = static_cast<double>(pk.k_hi) / n;
  r.mix = pk.k_lo == pk.k_hi ? 0.0 : static_cast<double>(pk.jm) / n;
  return r;
}

std::vector<double> oracle_tie_key(const std::vector<GroupRule>& rules, double target) {
  std::vector<double> key;
  double lo = 2.0, hi = -1.0;
  for (const auto& r : rules) {
    lo = std::min(lo, r.tau_hi);
    hi = std::max(hi, r.tau_hi);
  }
  key.push_back(rules.size() >= 2 ? hi - lo : 0.0);
  for (const auto& r : rules) {
    key.push_back(r.tau_hi);
    key.push_back(r.tau_lo);
    key.push_back(r.mix);
  }
  key.push_back(target);
  return key;
}

void oracle_offer(OracleBest& best, double util, const std::vector<Pick>& picks, double target,
                  int n) {
  if (best.found && util < best.util) return;
  std::vector<GroupRule> rules;
  for (const auto& pk : picks) rules.push_back(pick_to_rule(pk, n));
  auto key = oracle_tie_key(rules, target);
  if (!best.found || util > best.util || key < best.key) {
    best.found = true;
    best.util = util;
    best.picks = picks;
    best.target = target;
    best.key = std::move(key);
  }
}

}  // namespace

OptimizationResult brute_force_optimum(const BaselineSet& baselines, const UtilityParams& u,
                                       const FairnessConstraint& constraint, double resolution) {
  baselines.check();
  constraint.check();
  u.check();
  if (u.alpha + u.beta < 0.0) fail(Errc::NegativeRegime, "alpha + beta < 0");
  if (!(resolution > 0.0 && resolution <= 0.1))
    fail(Errc::InvalidArgument, "resolution must lie in (0, 0.1]");
  const int n = static_cast<int>(std::llround(1.0 / resolution));
  if (resolution < 0.001 - kSlack)
    fail(Errc::InvalidArgument, "oracle search space bounded to resolution >= 0.001");
  const std::size_t groups = baselines.per_group.size();
  if (groups > 3) fail(Errc::InvalidArgument, "oracle supports at most 3 groups");

  std::vector<Prep> prep;
  for (const auto& [g, d] : baselines.per_group) {
    Prep p;
    p.group = g;
    p.dist = &d;
    p.weight = baselines.group_weights.at(g);
    for (std::size_t b = 0; b < d.bins(); ++b) {
      p.tp_total += d.mass[b] * d.midpoint(b);
      p.fp_total += d.mass[b] * (1.0 - d.midpoint(b));
    }
    p.acc_up.resize(n + 1);
    p.tp_up.resize(n + 1);
    p.fp_up.resize(n + 1);
    p.util_up.resize(n + 1);
    p.acc_dn.resize(n + 1);
    p.tp_dn.resize(n + 1);
    p.util_dn.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      const double tau = static_cast<double>(k) / n;
      double au = 0, tu = 0, fu = 0, ad = 0, td = 0, uu = 0, ud = 0;
      for (std::size_t b = 0; b < d.bins(); ++b) {
        const double m = d.midpoint(b);
        const double w = d.mass[b];
        const double gain = m * u.alpha - (1.0 - m) * u.beta;
        if (m >= tau) {
          au += w;
          tu += w * m;
          fu += w * (1.0 - m);
          uu += w * gain;
        } else {
          uu += w * u.gamma;
        }
        if (m <= tau) {
          ad += w;
          td += w * m;
          ud += w * gain;
        } else {
          ud += w * u.gamma;
        }
      }
      p.acc_up[k] = au;
      p.tp_up[k] = tu;
      p.fp_up[k] = fu;
      p.util_up[k] = uu;
      p.acc_dn[k] = ad;
      p.tp_dn[k] = td;
      p.util_dn[k] = ud;
    }
    prep.push_back(std::move(p));
  }

  const double eps = constraint.epsilon;

  auto band_value = [](double hi, double lo, double mix) { return hi + mix * (lo - hi); };

  // component rate of an accept-above candidate (k_lo, k_hi, jm)
  auto rate_up = [&](const Prep& p, int k_lo, int k_hi, int jm, const std::string& comp)
      -> std::optional<double> {
    const double mix = k_lo == k_hi ? 0.0 : static_cast<double>(jm) / n;
    const double acc = band_value(p.acc_up[k_hi], p.acc_up[k_lo], mix);
    const double tp = band_value(p.tp_up[k_hi], p.tp_up[k_lo], mix);
    const double fp = band_value(p.fp_up[k_hi], p.fp_up[k_lo], mix);
    if (comp == "acceptance") return acc;
    if (comp == "tpr") return p.tp_total > 0.0 ? std::optional<double>(tp / p.tp_total) : std::nullopt;
    if (comp == "fpr") return p.fp_total > 0.0 ? std::optional<double>(fp / p.fp_total) : std::nullopt;
    if (comp == "ppv") return acc > 0.0 ? std::optional<double>(tp / acc) : std::nullopt;
    if (comp == "for")
      return acc < 1.0 ? std::optional<double>((p.tp_total - tp) / (1.0 - acc)) : std::nullopt;
    return std::nullopt;
  };
  auto rate_dn = [&](const Prep& p, int k, const std::string& comp) -> std::optional<double> {
    const double acc = p.acc_dn[k];
    const double tp = p.tp_dn[k];
    if (comp == "ppv") return acc > 0.0 ? std::optional<double>(tp / acc) : std::nullopt;
    if (comp == "for")
      return acc < 1.0 ? std::optional<double>((p.tp_total - tp) / (1.0 - acc)) : std::nullopt;
    return std::nullopt;
  };

  OracleBest best;

  // Closed-form fast path, mirrored from the optimizer's definition.
  {
    const double tau_star = std::min(1.0, std::max(0.0, (u.beta + u.gamma) / (u.alpha + u.beta)));
    std::vector<double> acc(groups), tp(groups), fp(groups);
    for (std::size_t a = 0; a < groups; ++a) {
      double au = 0, tu = 0, fu = 0;
      const auto& d = *prep[a].dist;
      for (std::size_t b = 0; b < d.bins(); ++b) {
        const double m = d.midpoint(b);
        if (m < tau_star) continue;
        au += d.mass[b];
        tu += d.mass[b] * m;
        fu += d.mass[b] * (1.0 - m);
      }
      acc[a] = au;
      tp[a] = tu;
      fp[a] = fu;
    }
    auto spread = [&](auto value) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      bool any = false;
      for (std::size_t a = 0; a < groups; ++a) {
        auto v = value(a);
        if (!v) continue;
        any = true;
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
      return any ? hi - lo : 0.0;
    };
    bool feasible = false;
    double pp_v = 0.0;
    switch (constraint.criterion) {
      case Criterion::Independence:
        feasible = spread([&](std::size_t a) { return std::optional<double>(acc[a]); }) <= eps + kSlack;
        break;
      case Criterion::EqualOpportunity:
        feasible = spread([&](std::size_t a) {
                     return prep[a].tp_total > 0.0 ? std::optional<double>(tp[a] / prep[a].tp_total)
                                                   : std::nullopt;
                   }) <= eps + kSlack;
        break;
      case Criterion::PredictiveEquality:
        feasible = spread([&](std::size_t a) {
                     return prep[a].fp_total > 0.0 ? std::optional<double>(fp[a] / prep[a].fp_total)
                                                   : std::nullopt;
                   }) <= eps + kSlack;
        break;
      case Criterion::EqualizedOdds:
        feasible = spread([&](std::size_t a) {
                     return prep[a].tp_total > 0.0 ? std::optional<double>(tp[a] / prep[a].tp_total)
                                                   : std::nullopt;
                   }) <= eps + kSlack &&
                   spread([&](std::size_t a) {
                     return prep[a].fp_total > 0.0 ? std::optional<double>(fp[a] / prep[a].fp_total)
                                                   : std::nullopt;
                   }) <= eps + kSlack;
        break;
      case Criterion::ConditionalStatisticalParity: {
        if (baselines.strata.empty())
          fail(Errc::MissingDeliverable,
               "conditional statistical parity needs stratum-refined baselines");
        feasible = true;
        for (const auto& [stratum, cells] : baselines.strata) {
          double lo = 2.0, hi = -1.0;
          int cnt = 0;
          for (const auto& [g, cell] : cells) {
            double au = 0;
            for (std::size_t b = 0; b < cell.dist.bins(); ++b)
              if (cell.dist.midpoint(b) >= tau_star) au += cell.dist.mass[b];
            lo = std::min(lo, au);
            hi = std::max(hi, au);
            ++cnt;
          }
          if (cnt >= 2 && hi - lo > eps + kSlack) feasible = false;
        }
        break;
      }
      case Criterion::Sufficiency: {
        feasible = true;
        for (std::size_t a = 0; a < groups; ++a)
          if (!(acc[a] > 0.0 && acc[a] < 1.0)) feasible = false;
        if (feasible)
          feasible = spread([&](std::size_t a) { return std::optional<double>(tp[a] / acc[a]); }) <=
                         eps + kSlack &&
                     spread([&](std::size_t a) {
                       return std::optional<double>((prep[a].tp_total - tp[a]) / (1.0 - acc[a]));
                     }) <= eps + kSlack;
        break;
      }
      case Criterion::PredictiveParity:
      case Criterion::FORParity: {
        const bool ppv = constraint.criterion == Criterion::PredictiveParity;
        std::vector<std::optional<double>> vals(groups);
        bool all_defined = true;
        for (std::size_t a = 0; a < groups; ++a) {
          if (ppv)
            vals[a] = acc[a] > 0.0 ? std::optional<double>(tp[a] / acc[a]) : std::nullopt;
          else
            vals[a] = acc[a] < 1.0
                          ? std::optional<double>((prep[a].tp_total - tp[a]) / (1.0 - acc[a]))
                          : std::nullopt;
          if (!vals[a]) all_defined = false;
        }
        if (all_defined) {
          for (int vi = 0; vi <= n && !feasible; ++vi) {
            const double v = static_cast<double>(vi) / n;
            bool ok = true;
            for (std::size_t a = 0; a < groups; ++a) {
              if (target_direction_of(ppv, v, prep[a].dist->base_rate) !=
                      Direction::AcceptAbove ||
                  std::fabs(*vals[a] - v) > eps + kSlack) {
                ok = false;
                break;
              }
            }
            if (ok) {
              feasible = true;
              pp_v = v;
            }
          }
        }
        break;
      }
    }
    if (feasible) {
      OptimizationResult res;
      double total = 0.0;
      for (std::size_t a = 0; a < groups; ++a) {
        GroupRule r{Direction::AcceptAbove, tau_star, tau_star, 0.0};
        res.rule.per_group[prep[a].group] = r;
        total += prep[a].weight * rule_utility_direct(prep[a], r, u);
      }
      res.expected_utility_per_capita = total;
      res.search_trace.method = "unconstrained-feasible";
      res.search_trace.resolution = 1.0 / n;
      if (constraint.criterion == Criterion::PredictiveParity ||
          constraint.criterion == Criterion::FORParity)
        res.target_value = pp_v;
      return res;
    }
  }

  const auto criterion = constraint.criterion;
  if (criterion == Criterion::Independence || criterion == Criterion::EqualOpportunity ||
      criterion == Criterion::PredictiveEquality ||
      criterion == Criterion::ConditionalStatisticalParity) {
    if (std::pow(static_cast<double>(n + 1), static_cast<double>(groups)) > 2e8)
      fail(Errc::InvalidArgument, "grid too fine for exhaustive tuple enumeration");

    // acceptance rate tables per (stratum, group) for conditional parity
    std::vector<std::vector<std::pair<std::size_t, std::vector<double>>>> csp_cells;
    if (criterion == Criterion::ConditionalStatisticalParity) {
      for (const auto& [stratum, cells] : baselines.strata) {
        std::vector<std::pair<std::size_t, std::vector<double>>> row;
        for (std::size_t a = 0; a < groups; ++a) {
          auto it = cells.find(prep[a].group);
          if (it == cells.end()) continue;
          std::vector<double> acc(n + 1, 0.0);
          for (int k = 0; k <= n; ++k) {
            const double tau = static_cast<double>(k) / n;
            double au = 0;
            for (std::size_t b = 0; b < it->second.dist.bins(); ++b)
              if (it->second.dist.midpoint(b) >= tau) au += it->second.dist.mass[b];
            acc[k] = au;
          }
          row.emplace_back(a, std::move(acc));
        }
        if (row.size() >= 2) csp_cells.push_back(std::move(row));
      }
    }

    const std::string comp = criterion == Criterion::EqualOpportunity   ? "tpr"
                             : criterion == Criterion::PredictiveEquality ? "fpr"
                                                                          : "acceptance";
    std::vector<int> k(groups, 0);
    for (;;) {
      bool feasible = true;
      if (criterion == Criterion::ConditionalStatisticalParity) {
        for (const auto& row : csp_cells) {
          double lo = 2.0, hi = -1.0;
          for (const auto& [a, acc] : row) {
            lo = std::min(lo, acc[k[a]]);
            hi = std::max(hi, acc[k[a]]);
          }
          if (hi - lo > eps + kSlack) {
            feasible = false;
            break;
          }
        }
      } else {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        bool any = false;
        for (std::size_t a = 0; a < groups; ++a) {
          auto v = rate_up(prep[a], k[a], k[a], 0, comp);
          if (!v) continue;
          any = true;
          lo = std::min(lo, *v);
          hi = std::max(hi, *v);
        }
        feasible = !any || hi - lo <= eps + kSlack;
      }
      if (feasible) {
        double total = 0.0;
        std::vector<Pick> picks(groups);
        for (std::size_t a = 0; a < groups; ++a) {
          total += prep[a].weight * prep[a].util_up[k[a]];
          picks[a] = {Direction::AcceptAbove, k[a], k[a], 0};
        }
        oracle_offer(best, total, picks, 0.0, n);
      }
      std::size_t d = 0;
      while (d < groups && ++k[d] > n) k[d++] = 0;
      if (d == groups) break;
    }
  } else if (criterion == Criterion::EqualizedOdds || criterion == Criterion::Sufficiency) {
    const bool need_defined = criterion == Criterion::Sufficiency;
    const std::string cx = criterion == Criterion::EqualizedOdds ? "tpr" : "ppv";
    const std::string cy = criterion == Criterion::EqualizedOdds ? "fpr" : "for";
    const int side = n + 1;
    const int k_eps = static_cast<int>(std::floor((eps + kSlack) * n));
    if (static_cast<double>(n) * n * n / 2.0 > 2.5e8)
      fail(Errc::InvalidArgument,
           "resolution too fine for the randomized-rule search; use >= 0.0015");

    struct OCell {
      double util = kNegInf;
      Pick pick;
    };
    std::vector<std::vector<OCell>> lattice(groups);
    std::vector<int> kx(groups, k_eps), ky(groups, k_eps);
    for (std::size_t a = 0; a < groups; ++a) {
      lattice[a].assign(static_cast<std::size_t>(side) * side, OCell{});
      const bool xd = !(cx == "tpr" && prep[a].tp_total <= 0.0);
      const bool yd = !(cy == "fpr" && prep[a].fp_total <= 0.0);
      if (!xd) kx[a] = n;
      if (!yd) ky[a] = n;
      auto put = [&](int k_lo, int k_hi, int jm) {
        auto rx = rate_up(prep[a], k_lo, k_hi, jm, cx);
        auto ry = rate_up(prep[a], k_lo, k_hi, jm, cy);
        if (need_defined && (!rx || !ry)) return;
        const int ix = rx && xd ? std::clamp<int>(static_cast<int>(std::llround(*rx * n)), 0, n) : 0;
        const int iy = ry && yd ? std::clamp<int>(static_cast<int>(std::llround(*ry * n)), 0, n) : 0;
        const double mix = k_lo == k_hi ? 0.0 : static_cast<double>(jm) / n;
        const double uu = band_value(prep[a].util_up[k_hi], prep[a].util_up[k_lo], mix);
        OCell& cell = lattice[a][static_cast<std::size_t>(ix) * side + iy];
        if (uu > cell.util || (uu == cell.util && std::tie(k_hi, k_lo, jm) <
                                                      std::tie(cell.pick.k_hi, cell.pick.k_lo,
                                                               cell.pick.jm))) {
          cell.util = uu;
          cell.pick = {Direction::AcceptAbove, k_lo, k_hi, jm};
        }
      };
      for (int kk = 0; kk <= n; ++kk) put(kk, kk, 0);
      for (int k_hi = 1; k_hi <= n; ++k_hi)
        for (int k_lo = 0; k_lo < k_hi; ++k_lo)
          for (int jm = 1; jm < n; ++jm) put(k_lo, k_hi, jm);
    }

    for (int wi = 0; wi < side; ++wi) {
      for (int wj = 0; wj < side; ++wj) {
        double total = 0.0;
        std::vector<Pick> picks(groups);
        bool ok = true;
        for (std::size_t a = 0; a < groups; ++a) {
          const int x0 = kx[a] >= n ? 0 : wi;
          const int x1 = kx[a] >= n ? n : std::min(n, wi + kx[a]);
          const int y0 = ky[a] >= n ? 0 : wj;
          const int y1 = ky[a] >= n ? n : std::min(n, wj + ky[a]);
          double bu = kNegInf;
          int bcell = -1;
          for (int ix = x0; ix <= x1; ++ix) {
            for (int iy = y0; iy <= y1; ++iy) {
              const int cell = ix * side + iy;
              const OCell& c = lattice[a][cell];
              if (c.util > bu) {
                bu = c.util;
                bcell = cell;
              }
            }
          }
          if (bcell < 0) {
            ok = false;
            break;
          }
          picks[a] = lattice[a][bcell].pick;
          total += prep[a].weight * bu;
        }
        if (!ok) continue;
        oracle_offer(best, total, picks, 0.0, n);
      }
    }
  } else {
    // predictive parity / FOR parity: v-scan with per-group threshold choice
    const bool ppv_target = criterion == Criterion::PredictiveParity;
    const std::string comp = ppv_target ? "ppv" : "for";
    for (int vi = 0; vi <= n; ++vi) {
      const double v = static_cast<double>(vi) / n;
      double total = 0.0;
      std::vector<Pick> picks(groups);
      bool ok = true;
      for (std::size_t a = 0; a < groups; ++a) {
        const Direction dir = target_direction_of(ppv_target, v, prep[a].dist->base_rate);
        double bu = kNegInf;
        int bk = -1;
        for (int kk = 0; kk <= n; ++kk) {
          std::optional<double> val = dir == Direction::AcceptAbove
                                          ? rate_up(prep[a], kk, kk, 0, comp)
                                          : rate_dn(prep[a], kk, comp);
          if (!val || std::fabs(*val - v) > eps + kSlack) continue;
          const double uu = dir == Direction::AcceptAbove ? prep[a].util_up[kk] : prep[a].util_dn[kk];
          if (uu > bu) {
            bu = uu;
            bk = kk;
          }
        }
        if (bk < 0) {
          ok = false;
          break;
        }
        picks[a] = {dir, bk, bk, 0};
        total += prep[a].weight * bu;
      }
      if (ok) oracle_offer(best, total, picks, v, n);
    }
  }

  if (!best.found) fail(Errc::Infeasible, "oracle found no feasible rule on the grid");

  OptimizationResult res;
  double total = 0.0;
  for (std::size_t a = 0; a < groups; ++a) {
    const GroupRule r = pick_to_rule(best.picks[a], n);
    res.rule.per_group[prep[a].group] = r;
    total += prep[a].weight * rule_utility_direct(prep[a], r, u);
  }
  res.expected_utility_per_capita = total;
  res.search_trace.resolution = 1.0 / n;
  res.search_trace.method = "exhaustive";
  if (criterion == Criterion::PredictiveParity || criterion == Criterion::FORParity)
    res.target_value = best.target;
  return res;
}

}  // namespace fairdecide::testkit

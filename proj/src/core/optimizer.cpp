#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <tuple>

#include "core/metrics.hpp"
#include "core/rng.hpp"

// Constraint-rate arithmetic convention, shared verbatim with the brute-force
// oracle in testkit.cpp so that feasibility classification is bit-identical
// across the two implementations:
//   - threshold grid: tau_i = i / N, N = llround(1 / resolution);
//   - accept-above stats: sum over bins in ascending index order of bins with
//     midpoint >= tau (accept-below: <= tau);
//   - banded stats: s = s_hi + mix * (s_lo - s_hi), mix = j / N;
//   - rates: single division by the ascending-order total;
//   - feasibility comparisons carry a +1e-12 slack;
//   - rate-lattice index: llround(rate * N), clamped to [0, N].
// Objective arithmetic is free; the oracle-equivalence tolerance absorbs it.

namespace fairdecide::optimizer {

namespace {

constexpr double kSlack = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Stats {
  double acc = 0.0;
  double tp = 0.0;  // mass-weighted sum of midpoints over the accept set
  double fp = 0.0;
};

struct GroupProfile {
  std::string group;
  const BaselineDistribution* dist = nullptr;
  double weight = 0.0;
  double tp_total = 0.0;
  double fp_total = 0.0;
  std::vector<Stats> up;    // accept-above stats per grid index
  std::vector<Stats> down;  // accept-below stats per grid index
  std::vector<double> util_up;
};

int grid_segments(double resolution) {
  if (!(resolution > 0.0 && resolution <= 0.1))
    fail(Errc::InvalidArgument, "resolution must lie in (0, 0.1]");
  return static_cast<int>(std::llround(1.0 / resolution));
}

Stats stats_at(const BaselineDistribution& d, double tau, Direction dir) {
  Stats s;
  for (std::size_t b = 0; b < d.bins(); ++b) {
    const double m = d.midpoint(b);
    const bool in = dir == Direction::AcceptAbove ? m >= tau : m <= tau;
    if (!in) continue;
    const double w = d.mass[b];
    s.acc += w;
    s.tp += w * m;
    s.fp += w * (1.0 - m);
  }
  return s;
}

double utility_of(const Stats& s, const UtilityParams& u) {
  return u.alpha * s.tp - u.beta * s.fp + u.gamma * (1.0 - s.acc);
}

GroupProfile make_profile(const std::string& group, const BaselineDistribution& dist, double weight,
                          int n, const UtilityParams& u) {
  GroupProfile p;
  p.group = group;
  p.dist = &dist;
  p.weight = weight;
  for (std::size_t b = 0; b < dist.bins(); ++b) {
    const double w = dist.mass[b];
    const double m = dist.midpoint(b);
    p.tp_total += w * m;
    p.fp_total += w * (1.0 - m);
  }
  p.up.resize(n + 1);
  p.down.resize(n + 1);
  p.util_up.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double tau = static_cast<double>(k) / n;
    p.up[k] = stats_at(dist, tau, Direction::AcceptAbove);
    p.down[k] = stats_at(dist, tau, Direction::AcceptBelow);
    p.util_up[k] = utility_of(p.up[k], u);
  }
  return p;
}

std::vector<GroupProfile> make_profiles(const BaselineSet& baselines, int n,
                                        const UtilityParams& u) {
  std::vector<GroupProfile> out;
  for (const auto& [g, d] : baselines.per_group)
    out.push_back(make_profile(g, d, baselines.group_weights.at(g), n, u));
  return out;
}

Stats band_stats(const Stats& hi, const Stats& lo, double mix) {
  return {hi.acc + mix * (lo.acc - hi.acc), hi.tp + mix * (lo.tp - hi.tp),
          hi.fp + mix * (lo.fp - hi.fp)};
}

Stats rule_stats(const GroupProfile& p, const GroupRule& r) {
  const Stats hi = stats_at(*p.dist, r.direction == Direction::AcceptAbove ? r.tau_hi : r.tau_lo,
                            r.direction);
  if (r.tau_lo == r.tau_hi) return hi;
  const Stats lo = stats_at(*p.dist, r.direction == Direction::AcceptAbove ? r.tau_lo : r.tau_hi,
                            r.direction);
  return band_stats(hi, lo, r.mix);
}

std::optional<double> pairwise(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

// Tuple ordering used to break exact utility ties: smaller spread of the
// per-group upper thresholds first, then lexicographically lower thresholds
// and mixes in group order, then a lower target value.
std::vector<double> tie_key(const std::vector<GroupRule>& rules, double target) {
  std::vector<double> key;
  std::vector<double> his;
  for (const auto& r : rules) his.push_back(r.tau_hi);
  key.push_back(pairwise(his).value_or(0.0));
  for (const auto& r : rules) {
    key.push_back(r.tau_hi);
    key.push_back(r.tau_lo);
    key.push_back(r.mix);
  }
  key.push_back(target);
  return key;
}

struct Best {
  bool found = false;
  double util = kNegInf;
  std::vector<GroupRule> rules;
  double target = 0.0;
  std::vector<double> key;

  void offer(double u, const std::vector<GroupRule>& rules_in, double target_in) {
    if (found && u < util) return;
    if (!found || u > util) {
      found = true;
      util = u;
      rules = rules_in;
      target = target_in;
      key = tie_key(rules_in, target_in);
      return;
    }
    auto k = tie_key(rules_in, target_in);
    if (k < key) {
      rules = rules_in;
      target = target_in;
      key = std::move(k);
    }
  }
};

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

DecisionRule unconstrained_rule(const std::vector<GroupProfile>& profiles,
                                const UtilityParams& u) {
  const double tau = clamp01(optimal_unconstrained_threshold(u));
  DecisionRule rule;
  for (const auto& p : profiles) rule.per_group[p.group] = {Direction::AcceptAbove, tau, tau, 0.0};
  return rule;
}

std::optional<double> component_rate(const GroupProfile& p, const Stats& s,
                                     const std::string& comp) {
  if (comp == "independence" || comp == "acceptance") return s.acc;
  if (comp == "tpr") {
    if (p.tp_total <= 0.0) return std::nullopt;
    return s.tp / p.tp_total;
  }
  if (comp == "fpr") {
    if (p.fp_total <= 0.0) return std::nullopt;
    return s.fp / p.fp_total;
  }
  if (comp == "ppv") {
    if (s.acc <= 0.0) return std::nullopt;
    return s.tp / s.acc;
  }
  if (comp == "for") {
    if (s.acc >= 1.0) return std::nullopt;
    return (p.tp_total - s.tp) / (1.0 - s.acc);
  }
  return std::nullopt;
}

// Gap achieved by `rules` for one component, over groups where it is defined.
std::optional<double> achieved_gap(const std::vector<GroupProfile>& profiles,
                                   const std::vector<GroupRule>& rules, const std::string& comp) {
  std::vector<double> values;
  for (std::size_t a = 0; a < profiles.size(); ++a) {
    auto v = component_rate(profiles[a], rule_stats(profiles[a], rules[a]), comp);
    if (v) values.push_back(*v);
  }
  if (values.size() < 2) return values.empty() ? std::nullopt : std::optional<double>(0.0);
  return pairwise(values);
}

Stats rule_stats_cell(const BaselineDistribution& d, const GroupRule& r) {
  const Stats hi = stats_at(d, r.direction == Direction::AcceptAbove ? r.tau_hi : r.tau_lo,
                            r.direction);
  if (r.tau_lo == r.tau_hi) return hi;
  const Stats lo = stats_at(d, r.direction == Direction::AcceptAbove ? r.tau_lo : r.tau_hi,
                            r.direction);
  return band_stats(hi, lo, r.mix);
}

double stratum_parity_gap(const BaselineSet& baselines, const std::vector<GroupProfile>& profiles,
                          const std::vector<GroupRule>& rules) {
  double gap = 0.0;
  for (const auto& [stratum, cells] : baselines.strata) {
    std::vector<double> rates;
    for (std::size_t a = 0; a < profiles.size(); ++a) {
      auto it = cells.find(profiles[a].group);
      if (it == cells.end()) continue;
      rates.push_back(rule_stats_cell(it->second.dist, rules[a]).acc);
    }
    if (rates.size() >= 2) gap = std::max(gap, *pairwise(rates));
  }
  return gap;
}

// -- grid search helpers ------------------------------------------------------

struct SearchContext {
  const BaselineSet* baselines = nullptr;
  UtilityParams u;
  FairnessConstraint constraint;
  int n = 0;
  std::vector<GroupProfile> profiles;
  std::uint64_t evaluations = 0;

  double tau(int k) const { return static_cast<double>(k) / n; }
};

// Deterministic single-component criteria: sweep a window anchor over every
// achieved rate value; for each anchor pick per group the best threshold whose
// rate lies in [anchor, anchor+epsilon].
Best search_single_rate(SearchContext& ctx, const std::string& comp) {
  const double eps = ctx.constraint.epsilon;
  const std::size_t groups = ctx.profiles.size();

  std::vector<std::vector<std::optional<double>>> rate(groups);
  std::vector<bool> constrained(groups, false);
  std::set<double> anchors;
  for (std::size_t a = 0; a < groups; ++a) {
    rate[a].resize(ctx.n + 1);
    for (int k = 0; k <= ctx.n; ++k) {
      Stats s = ctx.profiles[a].up[k];
      rate[a][k] = component_rate(ctx.profiles[a], s, comp);
      if (rate[a][k]) {
        constrained[a] = true;
        anchors.insert(*rate[a][k]);
      }
    }
  }
  if (anchors.empty()) anchors.insert(0.0);  // every group unconstrained

  Best best;
  for (double t : anchors) {
    double total = 0.0;
    std::vector<GroupRule> rules(groups);
    bool ok = true;
    for (std::size_t a = 0; a < groups; ++a) {
      double bu = kNegInf;
      int bk = -1;
      for (int k = 0; k <= ctx.n; ++k) {
        ++ctx.evaluations;
        if (constrained[a]) {
          if (!rate[a][k]) continue;
          // window [t, t+eps+slack]; with anchors drawn from achieved values
          // this is equivalent to a pairwise spread of at most eps+slack
          if (*rate[a][k] < t || *rate[a][k] > t + eps + kSlack) continue;
        }
        const double uu = ctx.profiles[a].util_up[k];
        if (uu > bu) {
          bu = uu;
          bk = k;
        }
      }
      if (bk < 0) {
        ok = false;
        break;
      }
      total += ctx.profiles[a].weight * bu;
      const double tv = ctx.tau(bk);
      rules[a] = {Direction::AcceptAbove, tv, tv, 0.0};
    }
    if (ok) best.offer(total, rules, 0.0);
  }
  return best;
}

// Conditional statistical parity: full product over deterministic threshold
// tuples, feasibility checked per stratum on the refined cells.
Best search_conditional_parity(SearchContext& ctx) {
  const auto& strata = ctx.baselines->strata;
  if (strata.empty())
    fail(Errc::MissingDeliverable,
         "conditional statistical parity needs stratum-refined baselines");
  const std::size_t groups = ctx.profiles.size();
  const double budget = std::pow(static_cast<double>(ctx.n + 1), static_cast<double>(groups));
  if (budget > 2e8)
    fail(Errc::InvalidArgument,
         "threshold grid too fine for this many groups; use a coarser resolution");

  // acceptance per (stratum, group, grid index); missing cells stay empty
  struct Cell {
    std::size_t group;
    std::vector<double> acc;
  };
  std::vector<std::vector<Cell>> cell_acc;  // per stratum
  for (const auto& [stratum, cells] : strata) {
    std::vector<Cell> row;
    for (std::size_t a = 0; a < groups; ++a) {
      auto it = cells.find(ctx.profiles[a].group);
      if (it == cells.end()) continue;
      Cell c;
      c.group = a;
      c.acc.resize(ctx.n + 1);
      for (int k = 0; k <= ctx.n; ++k)
        c.acc[k] = stats_at(it->second.dist, ctx.tau(k), Direction::AcceptAbove).acc;
      row.push_back(std::move(c));
    }
    if (row.size() >= 2) cell_acc.push_back(std::move(row));
  }

  const double eps = ctx.constraint.epsilon;
  std::vector<int> k(groups, 0);
  Best best;
  for (;;) {
    ++ctx.evaluations;
    bool feasible = true;
    for (const auto& row : cell_acc) {
      double lo = 2.0, hi = -1.0;
      for (const auto& c : row) {
        const double r = c.acc[k[c.group]];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (hi - lo > eps + kSlack) {
        feasible = false;
        break;
      }
    }
    if (feasible) {
      double total = 0.0;
      std::vector<GroupRule> rules(groups);
      for (std::size_t a = 0; a < groups; ++a) {
        total += ctx.profiles[a].weight * ctx.profiles[a].util_up[k[a]];
        const double tv = ctx.tau(k[a]);
        rules[a] = {Direction::AcceptAbove, tv, tv, 0.0};
      }
      best.offer(total, rules, 0.0);
    }
    std::size_t d = 0;
    while (d < groups && ++k[d] > ctx.n) k[d++] = 0;
    if (d == groups) break;
  }
  return best;
}

// -- randomized families (equalized odds, sufficiency) ------------------------

struct LatticeCell {
  double util = kNegInf;
  int k_lo = 0, k_hi = 0, jm = 0;
};

struct WindowEntry {
  double util = kNegInf;
  int cell = -1;
};

bool entry_better(const WindowEntry& a, const WindowEntry& b) {
  if (a.util != b.util) return a.util > b.util;
  return a.cell < b.cell;
}

// out[w] = best of in[w .. min(w+k, n-1)]; k >= n means the dimension is
// unconstrained and every window sees the whole line.
void slide_anchor_max(const std::vector<WindowEntry>& in, std::vector<WindowEntry>& out, int n,
                      int k, int stride, int base) {
  if (k >= n) {
    WindowEntry global;
    for (int w = 0; w < n; ++w)
      if (entry_better(in[base + w * stride], global)) global = in[base + w * stride];
    for (int w = 0; w < n; ++w) out[base + w * stride] = global;
    return;
  }
  std::deque<int> dq;
  for (int w = n - 1; w >= 0; --w) {
    const WindowEntry& e = in[base + w * stride];
    while (!dq.empty() && !entry_better(in[base + dq.back() * stride], e)) dq.pop_back();
    dq.push_back(w);
    while (dq.front() > w + k) dq.pop_front();
    out[base + w * stride] = in[base + dq.front() * stride];
  }
}

// Exhausts the family of randomized two-threshold rules on the grid for one
// group, bucketing by the rate-lattice cell of the two constrained components.
// comp_x / comp_y name the components ("tpr"/"fpr" or "ppv"/"for").
std::vector<LatticeCell> fill_lattice(SearchContext& ctx, const GroupProfile& p,
                                      const std::string& comp_x, const std::string& comp_y,
                                      bool require_defined, bool& x_defined, bool& y_defined) {
  const int n = ctx.n;
  const int side = n + 1;
  std::vector<LatticeCell> lat(static_cast<std::size_t>(side) * side);

  x_defined = !(comp_x == "tpr" && p.tp_total <= 0.0) && !(comp_x == "fpr" && p.fp_total <= 0.0);
  y_defined = !(comp_y == "tpr" && p.tp_total <= 0.0) && !(comp_y == "fpr" && p.fp_total <= 0.0);

  auto consider = [&](const Stats& s, int k_lo, int k_hi, int jm) {
    ++ctx.evaluations;
    auto rx = component_rate(p, s, comp_x);
    auto ry = component_rate(p, s, comp_y);
    if (require_defined && (!rx || !ry)) return;
    int ix = 0, iy = 0;
    if (rx && x_defined) ix = std::clamp<int>(static_cast<int>(std::llround(*rx * n)), 0, n);
    if (ry && y_defined) iy = std::clamp<int>(static_cast<int>(std::llround(*ry * n)), 0, n);
    LatticeCell& c = lat[static_cast<std::size_t>(ix) * side + iy];
    const double uu = utility_of(s, ctx.u);
    if (uu > c.util ||
        (uu == c.util && std::tie(k_hi, k_lo, jm) < std::tie(c.k_hi, c.k_lo, c.jm))) {
      c = {uu, k_lo, k_hi, jm};
    }
  };

  for (int k = 0; k <= n; ++k) consider(p.up[k], k, k, 0);
  for (int k_hi = 1; k_hi <= n; ++k_hi) {
    for (int k_lo = 0; k_lo < k_hi; ++k_lo) {
      const Stats& hi = p.up[k_hi];
      const Stats& lo = p.up[k_lo];
      for (int jm = 1; jm < n; ++jm) {
        const double mix = static_cast<double>(jm) / n;
        consider(band_stats(hi, lo, mix), k_lo, k_hi, jm);
      }
    }
  }
  return lat;
}

Best search_two_rate_randomized(SearchContext& ctx, const std::string& comp_x,
                                const std::string& comp_y, bool require_defined) {
  const int n = ctx.n;
  const int side = n + 1;
  if (static_cast<double>(n) * n * n / 2.0 > 2.5e8)
    fail(Errc::InvalidArgument,
         "resolution too fine for the randomized-rule search; use >= 0.0015");
  const int k_eps = static_cast<int>(std::floor((ctx.constraint.epsilon + kSlack) * n));

  const std::size_t groups = ctx.profiles.size();
  std::vector<std::vector<LatticeCell>> lattices(groups);
  std::vector<std::vector<WindowEntry>> window(groups);
  for (std::size_t a = 0; a < groups; ++a) {
    bool xd = true, yd = true;
    lattices[a] = fill_lattice(ctx, ctx.profiles[a], comp_x, comp_y, require_defined, xd, yd);
    const int kx = xd ? k_eps : side;
    const int ky = yd ? k_eps : side;

    std::vector<WindowEntry> cells(lattices[a].size());
    bool any = false;
    for (int i = 0; i < side * side; ++i) {
      if (lattices[a][i].util > kNegInf) {
        cells[i] = {lattices[a][i].util, i};
        any = true;
      }
    }
    if (!any) fail(Errc::Infeasible, "group '" + ctx.profiles[a].group +
                                         "' admits no rule with defined constraint rates");
    std::vector<WindowEntry> tmp(cells.size());
    for (int row = 0; row < side; ++row) slide_anchor_max(cells, tmp, side, ky, 1, row * side);
    window[a].resize(cells.size());
    for (int col = 0; col < side; ++col) slide_anchor_max(tmp, window[a], side, kx, side, col);
  }

  Best best;
  std::vector<const LatticeCell*> picked(groups);
  for (int wi = 0; wi < side; ++wi) {
    for (int wj = 0; wj < side; ++wj) {
      double total = 0.0;
      bool ok = true;
      for (std::size_t a = 0; a < groups; ++a) {
        const WindowEntry& e = window[a][static_cast<std::size_t>(wi) * side + wj];
        if (e.cell < 0) {
          ok = false;
          break;
        }
        picked[a] = &lattices[a][e.cell];
        total += ctx.profiles[a].weight * e.util;
      }
      if (!ok || (best.found && total < best.util)) continue;
      std::vector<GroupRule> rules(groups);
      for (std::size_t a = 0; a < groups; ++a) {
        const LatticeCell& c = *picked[a];
        rules[a] = {Direction::AcceptAbove, ctx.tau(c.k_lo), ctx.tau(c.k_hi),
                    c.k_lo == c.k_hi ? 0.0 : static_cast<double>(c.jm) / n};
      }
      best.offer(total, rules, 0.0);
    }
  }
  if (!best.found) fail(Errc::Infeasible, "no rule tuple satisfies the constraint on this grid");
  return best;
}

// Predictive parity / FOR parity: scan the target value v over the grid; per
// group the direction follows the sign of v minus the group's base rate, and
// the threshold must achieve the target component within epsilon of v.
// For the PPV target, v above the base rate needs an accept-above rule (the
// accepted tail is where high probabilities live). The FOR target flips:
// accept-above rules reject the low-probability tail, so their false omission
// rate stays below the base rate and v above it needs accept-below.
Direction target_direction(const std::string& comp, double v, double base_rate, bool* at_base) {
  *at_base = std::fabs(v - base_rate) <= kSlack;
  if (*at_base) return Direction::AcceptAbove;
  const bool above = v > base_rate;
  if (comp == "ppv") return above ? Direction::AcceptAbove : Direction::AcceptBelow;
  return above ? Direction::AcceptBelow : Direction::AcceptAbove;
}

Best search_target_value(SearchContext& ctx, const std::string& comp,
                         std::vector<std::string>* warnings) {
  const int n = ctx.n;
  const double eps = ctx.constraint.epsilon;
  const std::size_t groups = ctx.profiles.size();

  struct Cand {
    std::vector<std::optional<double>> value;  // per grid index
    std::vector<double> util;
  };
  std::vector<Cand> up(groups), down(groups);
  for (std::size_t a = 0; a < groups; ++a) {
    up[a].value.resize(n + 1);
    up[a].util.resize(n + 1);
    down[a].value.resize(n + 1);
    down[a].util.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      up[a].value[k] = component_rate(ctx.profiles[a], ctx.profiles[a].up[k], comp);
      up[a].util[k] = ctx.profiles[a].util_up[k];
      down[a].value[k] = component_rate(ctx.profiles[a], ctx.profiles[a].down[k], comp);
      down[a].util[k] = utility_of(ctx.profiles[a].down[k], ctx.u);
    }
  }

  bool warned_base_rate = false;
  Best best;
  for (int vi = 0; vi <= n; ++vi) {
    const double v = ctx.tau(vi);
    double total = 0.0;
    std::vector<GroupRule> rules(groups);
    bool ok = true;
    for (std::size_t a = 0; a < groups; ++a) {
      bool at_base = false;
      const Direction dir =
          target_direction(comp, v, ctx.profiles[a].dist->base_rate, &at_base);
      if (at_base && !warned_base_rate && warnings) {
        warnings->push_back("target value equals the base rate of group '" +
                            ctx.profiles[a].group + "'; direction defaults to accept-above");
        warned_base_rate = true;
      }
      const Cand& c = dir == Direction::AcceptAbove ? up[a] : down[a];
      double bu = kNegInf;
      int bk = -1;
      for (int k = 0; k <= n; ++k) {
        ++ctx.evaluations;
        if (!c.value[k] || std::fabs(*c.value[k] - v) > eps + kSlack) continue;
        if (c.util[k] > bu) {
          bu = c.util[k];
          bk = k;
        }
      }
      if (bk < 0) {
        ok = false;
        break;
      }
      total += ctx.profiles[a].weight * bu;
      const double tv = ctx.tau(bk);
      rules[a] = {dir, tv, tv, 0.0};
    }
    if (ok) best.offer(total, rules, v);
  }
  if (!best.found)
    fail(Errc::Infeasible, "no target value admits thresholds achieving " + comp +
                               " within epsilon in every group");
  return best;
}

// Unconstrained-rule feasibility check; when it passes the constraint the
// closed-form solution is globally optimal and both implementations return it
// unchanged.
bool unconstrained_feasible(SearchContext& ctx, const std::vector<GroupRule>& rules,
                            std::optional<double>* pp_target) {
  const double eps = ctx.constraint.epsilon;
  auto gap_ok = [&](const std::string& comp) {
    auto g = achieved_gap(ctx.profiles, rules, comp);
    return !g || *g <= eps + kSlack;
  };
  switch (ctx.constraint.criterion) {
    case Criterion::Independence:
      return gap_ok("acceptance");
    case Criterion::EqualOpportunity:
      return gap_ok("tpr");
    case Criterion::PredictiveEquality:
      return gap_ok("fpr");
    case Criterion::EqualizedOdds:
      return gap_ok("tpr") && gap_ok("fpr");
    case Criterion::ConditionalStatisticalParity: {
      if (ctx.baselines->strata.empty())
        fail(Errc::MissingDeliverable,
             "conditional statistical parity needs stratum-refined baselines");
      return stratum_parity_gap(*ctx.baselines, ctx.profiles, rules) <= eps + kSlack;
    }
    case Criterion::Sufficiency: {
      for (std::size_t a = 0; a < ctx.profiles.size(); ++a) {
        const Stats s = rule_stats(ctx.profiles[a], rules[a]);
        if (!(s.acc > 0.0 && s.acc < 1.0)) return false;
      }
      return gap_ok("ppv") && gap_ok("for");
    }
    case Criterion::PredictiveParity:
    case Criterion::FORParity: {
      const std::string comp = ctx.constraint.criterion == Criterion::PredictiveParity ? "ppv" : "for";
      std::vector<std::optional<double>> vals(ctx.profiles.size());
      for (std::size_t a = 0; a < ctx.profiles.size(); ++a) {
        vals[a] = component_rate(ctx.profiles[a], rule_stats(ctx.profiles[a], rules[a]), comp);
        if (!vals[a]) return false;
      }
      for (int vi = 0; vi <= ctx.n; ++vi) {
        const double v = ctx.tau(vi);
        bool ok = true;
        for (std::size_t a = 0; a < ctx.profiles.size(); ++a) {
          // the all-accept-above rule is in the family only when the
          // direction law maps v to accept-above for every group
          bool at_base = false;
          if (target_direction(comp, v, ctx.profiles[a].dist->base_rate, &at_base) !=
                  Direction::AcceptAbove ||
              std::fabs(*vals[a] - v) > eps + kSlack) {
            ok = false;
            break;
          }
        }
        if (ok) {
          if (pp_target) *pp_target = v;
          return true;
        }
      }
      return false;
    }
  }
  return false;
}

std::vector<GroupRule> rules_in_profile_order(const std::vector<GroupProfile>& profiles,
                                              const DecisionRule& rule) {
  std::vector<GroupRule> out;
  for (const auto& p : profiles) out.push_back(rule.per_group.at(p.group));
  return out;
}

}  // namespace

double evaluate_utility(const DecisionRule& rule, const BaselineSet& baselines,
                        const UtilityParams& u) {
  u.check();
  rule.check();
  baselines.check();
  for (const auto& [g, _] : rule.per_group)
    if (!baselines.per_group.count(g))
      fail(Errc::GroupMismatch, "rule group '" + g + "' has no baseline");
  double total = 0.0;
  for (const auto& [g, d] : baselines.per_group) {
    auto it = rule.per_group.find(g);
    if (it == rule.per_group.end())
      fail(Errc::GroupMismatch, "baseline group '" + g + "' is not covered by the rule");
    const GroupRule& r = it->second;
    double gu = 0.0;
    for (std::size_t b = 0; b < d.bins(); ++b) {
      const double m = d.midpoint(b);
      double q;
      if (r.direction == Direction::AcceptAbove)
        q = m >= r.tau_hi ? 1.0 : (m < r.tau_lo ? 0.0 : r.mix);
      else
        q = m <= r.tau_lo ? 1.0 : (m > r.tau_hi ? 0.0 : r.mix);
      gu += d.mass[b] * (q * (m * u.alpha - (1.0 - m) * u.beta) + (1.0 - q) * u.gamma);
    }
    total += baselines.group_weights.at(g) * gu;
  }
  return total;
}

double optimal_unconstrained_threshold(const UtilityParams& u) {
  u.check();
  if (u.alpha + u.beta < 0.0)
    fail(Errc::NegativeRegime,
         "alpha + beta < 0 inverts the threshold rule; refusing to emit one");
  return (u.beta + u.gamma) / (u.alpha + u.beta);
}

OptimizationResult optimize_unconstrained(const BaselineSet& baselines, const UtilityParams& u) {
  baselines.check();
  const double tau = clamp01(optimal_unconstrained_threshold(u));

  OptimizationResult res;
  for (const auto& [g, _] : baselines.per_group)
    res.rule.per_group[g] = {Direction::AcceptAbove, tau, tau, 0.0};
  res.expected_utility_per_capita = evaluate_utility(res.rule, baselines, u);
  res.search_trace.method = "closed-form";

  // informational gaps of the induced rule
  SearchContext ctx;
  ctx.baselines = &baselines;
  ctx.u = u;
  ctx.n = 1;
  ctx.profiles = make_profiles(baselines, 1, u);
  auto rules = rules_in_profile_order(ctx.profiles, res.rule);
  for (const std::string comp : {"acceptance", "tpr", "fpr", "ppv", "for"}) {
    auto g = achieved_gap(ctx.profiles, rules, comp);
    if (g) res.achieved_gaps[comp == "acceptance" ? "independence" : comp] = *g;
  }
  return res;
}

OptimizationResult optimize_constrained(const BaselineSet& baselines, const UtilityParams& u,
                                        const FairnessConstraint& constraint, double resolution) {
  baselines.check();
  constraint.check();
  u.check();
  if (u.alpha + u.beta < 0.0)
    fail(Errc::NegativeRegime, "alpha + beta < 0 inverts the threshold rule; refusing");

  SearchContext ctx;
  ctx.baselines = &baselines;
  ctx.u = u;
  ctx.constraint = constraint;
  ctx.n = grid_segments(resolution);
  ctx.profiles = make_profiles(baselines, ctx.n, u);

  OptimizationResult res;
  res.search_trace.resolution = 1.0 / ctx.n;

  if (constraint.criterion == Criterion::PredictiveParity ||
      constraint.criterion == Criterion::FORParity) {
    for (const auto& p : ctx.profiles) {
      if (p.dist->base_rate_source != BaseRateSource::Labels) {
        res.warnings.push_back("group '" + p.group +
                               "': base rate estimated from calibrated scores, not labels");
      }
    }
  }

  // When the closed-form optimum already satisfies the constraint it is the
  // global constrained optimum; return it without searching.
  const DecisionRule unc = unconstrained_rule(ctx.profiles, u);
  auto unc_rules = rules_in_profile_order(ctx.profiles, unc);
  std::optional<double> pp_target;
  Best best;
  if (unconstrained_feasible(ctx, unc_rules, &pp_target)) {
    best.found = true;
    best.util = 0.0;
    for (std::size_t a = 0; a < ctx.profiles.size(); ++a)
      best.util += ctx.profiles[a].weight * utility_of(rule_stats(ctx.profiles[a], unc_rules[a]), u);
    best.rules = unc_rules;
    best.target = pp_target.value_or(0.0);
    res.search_trace.method = "unconstrained-feasible";
  } else {
    switch (constraint.criterion) {
      case Criterion::Independence:
        best = search_single_rate(ctx, "acceptance");
        res.search_trace.method = "anchor-sweep";
        break;
      case Criterion::EqualOpportunity:
        best = search_single_rate(ctx, "tpr");
        res.search_trace.method = "anchor-sweep";
        break;
      case Criterion::PredictiveEquality:
        best = search_single_rate(ctx, "fpr");
        res.search_trace.method = "anchor-sweep";
        break;
      case Criterion::ConditionalStatisticalParity:
        best = search_conditional_parity(ctx);
        res.search_trace.method = "product-enumeration";
        break;
      case Criterion::EqualizedOdds:
        best = search_two_rate_randomized(ctx, "tpr", "fpr", false);
        res.search_trace.method = "lattice-window";
        break;
      case Criterion::Sufficiency:
        best = search_two_rate_randomized(ctx, "ppv", "for", true);
        res.search_trace.method = "lattice-window";
        break;
      case Criterion::PredictiveParity:
        best = search_target_value(ctx, "ppv", &res.warnings);
        res.search_trace.method = "v-scan";
        break;
      case Criterion::FORParity:
        best = search_target_value(ctx, "for", &res.warnings);
        res.search_trace.method = "v-scan";
        break;
    }
    if (!best.found)
      fail(Errc::Infeasible, "no feasible rule on the search grid for criterion " +
                                 std::string(criterion_name(constraint.criterion)));
  }

  for (std::size_t a = 0; a < ctx.profiles.size(); ++a)
    res.rule.per_group[ctx.profiles[a].group] = best.rules[a];
  res.expected_utility_per_capita = evaluate_utility(res.rule, baselines, u);
  res.search_trace.evaluations = ctx.evaluations;
  if (constraint.criterion == Criterion::PredictiveParity ||
      constraint.criterion == Criterion::FORParity)
    res.target_value = best.target;

  const bool searched = res.search_trace.method != "unconstrained-feasible";
  for (const auto& comp : metrics::constraint_components(constraint.criterion)) {
    std::optional<double> g;
    if (comp == "independence")
      g = achieved_gap(ctx.profiles, best.rules, "acceptance");
    else if (comp == "conditional_statistical_parity")
      g = stratum_parity_gap(baselines, ctx.profiles, best.rules);
    else
      g = achieved_gap(ctx.profiles, best.rules, comp);
    if (g) {
      res.achieved_gaps[comp] = *g;
      res.binding[comp] = searched && (*g + res.search_trace.resolution >= constraint.epsilon);
    } else {
      res.warnings.push_back("constraint component '" + comp +
                             "' is undefined under the baselines");
      res.binding[comp] = false;
    }
  }
  return res;
}

Instances apply_rule(const DecisionRule& rule, const Instances& instances, std::uint64_t seed) {
  rule.check();
  Instances out = instances;
  for (auto& x : out) {
    auto it = rule.per_group.find(x.group);
    if (it == rule.per_group.end())
      fail(Errc::UnknownGroup, "instance '" + x.id + "': rule does not cover group '" + x.group + "'");
    if (!x.calibrated_p)
      fail(Errc::UncalibratedInstance, "instance '" + x.id + "' has no calibrated probability");
    const GroupRule& r = it->second;
    const double p = *x.calibrated_p;
    int d;
    if (r.direction == Direction::AcceptAbove) {
      if (p >= r.tau_hi)
        d = 1;
      else if (p < r.tau_lo)
        d = 0;
      else
        d = rng::instance_draw(seed, x.id) < r.mix ? 1 : 0;
    } else {
      if (p <= r.tau_lo)
        d = 1;
      else if (p > r.tau_hi)
        d = 0;
      else
        d = rng::instance_draw(seed, x.id) < r.mix ? 1 : 0;
    }
    x.decision = d;
  }
  return out;
}

}  // namespace fairdecide::optimizer

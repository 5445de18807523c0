#include "core/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace fairdecide::baseline {

namespace {

BaselineDistribution estimate_from(const std::vector<const LabeledInstance*>& members,
                                   const std::string& label, int bin_count) {
  if (members.empty()) fail(Errc::EmptyGroup, "group '" + label + "' has no instances");
  if (bin_count < 1) fail(Errc::InvalidArgument, "bin_count must be >= 1");

  BaselineDistribution b;
  b.group = label;
  b.count = static_cast<std::int64_t>(members.size());
  b.bin_edges.resize(bin_count + 1);
  for (int i = 0; i <= bin_count; ++i) b.bin_edges[i] = static_cast<double>(i) / bin_count;
  b.bin_edges.back() = 1.0;
  b.mass.assign(bin_count, 0.0);

  std::int64_t labeled = 0, positives = 0;
  double p_sum = 0.0;
  for (const auto* x : members) {
    if (!x->calibrated_p)
      fail(Errc::UncalibratedInstance, "instance '" + x->id + "' has no calibrated probability");
    const double p = *x->calibrated_p;
    if (!(p >= 0.0 && p <= 1.0))
      fail(Errc::InvalidArgument, "calibrated_p of '" + x->id + "' outside [0,1]");
    auto bin = static_cast<std::size_t>(std::min<double>(std::floor(p * bin_count), bin_count - 1));
    b.mass[bin] += 1.0;
    p_sum += p;
    if (x->outcome) {
      labeled += 1;
      positives += *x->outcome;
    }
  }
  for (auto& m : b.mass) m /= static_cast<double>(b.count);

  // Labels win when they cover at least 90% of the group; otherwise fall back
  // to the mean calibrated probability and flag the source.
  if (labeled * 10 >= b.count * 9 && labeled > 0) {
    b.base_rate = static_cast<double>(positives) / static_cast<double>(labeled);
    b.base_rate_source = BaseRateSource::Labels;
  } else {
    b.base_rate = p_sum / static_cast<double>(b.count);
    b.base_rate_source = BaseRateSource::CalibratedScores;
  }
  b.check();
  return b;
}

}  // namespace

BaselineDistribution estimate(const Instances& instances, const std::string& group, int bin_count) {
  std::vector<const LabeledInstance*> members;
  for (const auto& x : instances)
    if (x.group == group) members.push_back(&x);
  return estimate_from(members, group, bin_count);
}

BaselineSet estimate_set(const Instances& instances, int bin_count,
                         const std::vector<std::string>& declared_groups, bool with_strata) {
  if (instances.empty()) fail(Errc::EmptyGroup, "no instances");
  std::set<std::string> groups(declared_groups.begin(), declared_groups.end());
  for (const auto& x : instances) groups.insert(x.group);

  BaselineSet set;
  const double total = static_cast<double>(instances.size());
  for (const auto& g : groups) {
    set.per_group[g] = estimate(instances, g, bin_count);
    set.group_weights[g] = static_cast<double>(set.per_group.at(g).count) / total;
  }

  if (with_strata) {
    std::map<std::string, std::map<std::string, std::vector<const LabeledInstance*>>> cells;
    for (const auto& x : instances) {
      if (!x.stratum) fail(Errc::MissingStratum, "instance '" + x.id + "' has no stratum");
      cells[*x.stratum][x.group].push_back(&x);
    }
    for (const auto& [stratum, by_group] : cells) {
      for (const auto& [g, members] : by_group) {
        StratumCell cell;
        cell.dist = estimate_from(members, g, bin_count);
        cell.weight = static_cast<double>(members.size()) / total;
        set.strata[stratum][g] = std::move(cell);
      }
    }
  }
  set.check();
  return set;
}

RatePoint expected_rate_curves(const BaselineDistribution& b, double tau, Direction direction) {
  b.check();
  double acc = 0.0, tp_in = 0.0, fp_in = 0.0, tp_total = 0.0, fp_total = 0.0;
  for (std::size_t i = 0; i < b.bins(); ++i) {
    const double w = b.mass[i];
    const double m = b.midpoint(i);
    const bool accepted = direction == Direction::AcceptAbove ? m >= tau : m <= tau;
    tp_total += w * m;
    fp_total += w * (1.0 - m);
    if (accepted) {
      acc += w;
      tp_in += w * m;
      fp_in += w * (1.0 - m);
    }
  }
  RatePoint r;
  r.acceptance = acc;
  if (tp_total > 0.0) r.tpr = tp_in / tp_total;
  if (fp_total > 0.0) r.fpr = fp_in / fp_total;
  if (acc > 0.0) r.ppv = tp_in / acc;
  if (acc < 1.0) {
    const double rej = 1.0 - acc;
    r.for_rate = (tp_total - tp_in) / rej;
  }
  return r;
}

}  // namespace fairdecide::baseline

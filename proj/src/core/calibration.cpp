#include "core/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fairdecide::calibration {

namespace {

std::size_t bin_of(const std::vector<double>& edges, double x) {
  // number of interior edges <= x; an exact edge hit lands in the higher bin
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

bool in_scope(const LabeledInstance& x, const std::string& scope) {
  return scope.empty() || x.group == scope;
}

}  // namespace

CalibrationFunction fit(const Instances& instances, const std::string& group_scope, int bin_count) {
  if (bin_count < 1) fail(Errc::InvalidArgument, "bin_count must be >= 1");
  std::vector<std::pair<double, int>> labeled;  // (score, y)
  for (const auto& x : instances)
    if (in_scope(x, group_scope) && x.outcome) labeled.emplace_back(x.raw_score, *x.outcome);
  if (labeled.empty())
    fail(Errc::NoLabeledData, "no labeled instances in scope '" + group_scope + "'");
  const std::int64_t n = static_cast<std::int64_t>(labeled.size());
  if (bin_count > n)
    fail(Errc::InsufficientData, "bin_count " + std::to_string(bin_count) + " exceeds " +
                                     std::to_string(n) + " labeled instances in scope");

  std::sort(labeled.begin(), labeled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Equal-frequency boundaries; a boundary inside a tie run slides to its end
  // so edges stay strictly ascending and never split equal scores.
  std::vector<double> edges;
  for (int k = 1; k < bin_count; ++k) {
    std::int64_t r = (static_cast<std::int64_t>(k) * n) / bin_count;
    if (r <= 0 || r >= n) continue;
    while (r < n && labeled[r].first == labeled[r - 1].first) ++r;
    if (r >= n) continue;
    const double edge = 0.5 * (labeled[r - 1].first + labeled[r].first);
    if (edges.empty() || edge > edges.back()) edges.push_back(edge);
  }

  const std::size_t bins = edges.size() + 1;
  std::vector<std::int64_t> counts(bins, 0), positives(bins, 0);
  for (const auto& [s, y] : labeled) {
    const std::size_t b = bin_of(edges, s);
    counts[b] += 1;
    positives[b] += y;
  }

  CalibrationFunction fn;
  fn.group_scope = group_scope;
  fn.bin_edges = edges;
  fn.fit_counts = counts;
  fn.bin_values.resize(bins);
  for (std::size_t b = 0; b < bins; ++b)
    fn.bin_values[b] = static_cast<double>(positives[b]) / static_cast<double>(counts[b]);

  // Pool adjacent violators: level each violating run to its count-weighted
  // mean. Edges are kept; only values flatten.
  struct Block {
    double value;
    double weight;
    std::size_t span;
  };
  std::vector<Block> stack;
  for (std::size_t b = 0; b < bins; ++b) {
    Block cur{fn.bin_values[b], static_cast<double>(counts[b]), 1};
    while (!stack.empty() && stack.back().value > cur.value) {
      const Block& prev = stack.back();
      const double w = prev.weight + cur.weight;
      cur.value = w > 0 ? (prev.value * prev.weight + cur.value * cur.weight) / w : cur.value;
      cur.weight = w;
      cur.span += prev.span;
      stack.pop_back();
    }
    stack.push_back(cur);
  }
  std::size_t b = 0;
  for (const auto& blk : stack)
    for (std::size_t i = 0; i < blk.span; ++i) fn.bin_values[b++] = blk.value;

  fn.check();
  return fn;
}

double apply(const CalibrationFunction& fn, double raw_score) {
  fn.check();
  return fn.bin_values[bin_of(fn.bin_edges, raw_score)];
}

void calibrate_instances(Instances& instances, const CalibrationSet& set) {
  if (!set.global && set.per_group.empty())
    fail(Errc::InvalidArgument, "calibration set holds no function");
  for (auto& x : instances) {
    const CalibrationFunction* fn = nullptr;
    if (set.fairness_mode()) {
      auto it = set.per_group.find(x.group);
      if (it == set.per_group.end()) {
        if (!set.global)
          fail(Errc::UnknownGroup, "no calibration function for group '" + x.group + "'");
        fn = &*set.global;
      } else {
        fn = &it->second;
      }
    } else {
      fn = &*set.global;
    }
    x.calibrated_p = apply(*fn, x.raw_score);
  }
}

CalibrationReport error_report(const CalibrationFunction& fn, const Instances& instances) {
  fn.check();
  const std::size_t bins = fn.bins();
  std::vector<std::int64_t> counts(bins, 0), positives(bins, 0);
  std::vector<double> score_sums(bins, 0.0);
  std::int64_t n = 0;
  for (const auto& x : instances) {
    if (!in_scope(x, fn.group_scope) || !x.outcome) continue;
    const std::size_t b = bin_of(fn.bin_edges, x.raw_score);
    counts[b] += 1;
    positives[b] += *x.outcome;
    score_sums[b] += x.raw_score;
    n += 1;
  }
  if (n == 0) fail(Errc::NoLabeledData, "no labeled instances to evaluate calibration on");

  CalibrationReport report;
  report.group_scope = fn.group_scope;
  double ece = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    CalibrationBin cb;
    cb.count = counts[b];
    if (counts[b] > 0) {
      cb.frequency = static_cast<double>(positives[b]) / static_cast<double>(counts[b]);
      cb.mean_score = score_sums[b] / static_cast<double>(counts[b]);
      ece += (static_cast<double>(counts[b]) / static_cast<double>(n)) *
             std::fabs(cb.frequency - fn.bin_values[b]);
    }
    report.bins.push_back(cb);
  }
  report.ece = ece;
  return report;
}

}  // namespace fairdecide::calibration

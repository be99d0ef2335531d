#include "xferlens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "xferlens/errors.hpp"
#include "xferlens/manifest.hpp"
#include "xferlens/parallel.hpp"

namespace xferlens {

double accuracy(std::uint64_t correct, std::uint64_t total) {
  if (total == 0) throw DegenerateInputError("accuracy needs a positive total");
  if (correct > total) throw RangeError("correct exceeds total");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double dice(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  const std::uint64_t denom = 2 * tp + fp + fn;
  if (denom == 0) throw DegenerateInputError("dice undefined when tp + fp + fn = 0");
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw RangeError("labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(l);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateInputError("auc needs both a positive and a negative label");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, {}, [&](std::size_t i) { return scores[i]; });

  // Sum of positive ranks, ties sharing their mean rank. Twice the ranks are
  // integers, which keeps the arithmetic exact.
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t twice_mean_rank = (i + 1) + j;  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) twice_rank_sum += twice_mean_rank;
    i = j;
  }
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double sample_mean(std::span<const double> v) {
  if (v.empty()) throw DegenerateInputError("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) throw DegenerateInputError("standard deviation needs at least two values");
  const double m = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw RangeError("degrees of freedom must be positive");
  if (std::isnan(t)) throw NumericError("t is NaN");
  if (t == 0.0) return 1.0;
  const double x = dof / (dof + t * t);
  return boost::math::ibeta(dof / 2.0, 0.5, x);
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateInputError("welch test needs at least two values per group");
  WelchResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = sample_mean(a);
  r.mean_b = sample_mean(b);
  r.std_a = sample_std(a);
  r.std_b = sample_std(b);
  const double va = r.std_a * r.std_a;
  const double vb = r.std_b * r.std_b;
  const double na = static_cast<double>(r.n_a);
  const double nb = static_cast<double>(r.n_b);
  const double sa = va / na;
  const double sb = vb / nb;
  if (sa + sb <= 0.0) throw DegenerateInputError("both samples are constant; t is undefined");

  r.t = (r.mean_a - r.mean_b) / std::sqrt(sa + sb);
  if (r.n_a == r.n_b) {
    // Same value as the general Welch-Satterthwaite form. Variances that
    // differ only by rounding give r^2 below one ulp and so exactly 2(n - 1).
    const double ratio = (va - vb) / (va + vb);
    r.dof = 2.0 * (na - 1.0) / (1.0 + ratio * ratio);
  } else {
    r.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  }
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

const std::vector<double>& RunSet::group(const std::string& id) const {
  for (const auto& [name, values] : groups)
    if (name == id) return values;
  throw KeyError("run set '" + task_id + "' has no group '" + id + "'");
}

RunSet parse_runset(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("run set must be an object");
  RunSet r;
  if (!doc.contains("task") || !doc["task"].is_string()) throw SchemaError("run set lacks string 'task'");
  if (!doc.contains("metric") || !doc["metric"].is_string()) throw SchemaError("run set lacks string 'metric'");
  if (!doc.contains("groups") || !doc["groups"].is_object()) throw SchemaError("run set lacks object 'groups'");
  r.task_id = doc["task"].get<std::string>();
  r.metric = doc["metric"].get<std::string>();
  if (r.metric != "accuracy" && r.metric != "auc" && r.metric != "dice" && r.metric != "other")
    throw SchemaError("unknown metric '" + r.metric + "'");
  for (const auto& [id, values] : doc["groups"].items()) {
    if (!values.is_array()) throw SchemaError("group '" + id + "' must be an array");
    std::vector<double> v;
    for (const auto& x : values) {
      if (!x.is_number()) throw SchemaError("group '" + id + "' holds a non-number");
      v.push_back(x.get<double>());
      if (!std::isfinite(v.back())) throw SchemaError("group '" + id + "' holds a non-finite value");
    }
    if (v.size() < 2) throw SchemaError("group '" + id + "' needs at least two runs");
    r.groups.emplace_back(id, std::move(v));
  }
  auto count_field = [&](const char* name) -> std::optional<std::uint64_t> {
    if (!doc.contains(name)) return std::nullopt;
    if (!doc[name].is_number_unsigned()) throw SchemaError(std::string(name) + " must be a non-negative integer");
    return doc[name].get<std::uint64_t>();
  };
  r.n_train_examples = count_field("n_train_examples");
  r.n_classes = count_field("n_classes");
  return r;
}

RunSet load_runset(const std::filesystem::path& path) {
  return parse_runset(read_json_file(path));
}

DeltaResult relative_delta(const RunSet& runs, const std::string& a, const std::string& b) {
  const auto& ga = runs.group(a);
  const auto& gb = runs.group(b);
  DeltaResult d;
  d.group_a = a;
  d.group_b = b;
  const double mb = sample_mean(gb);
  if (mb == 0.0) throw DegenerateInputError("reference group mean is zero");
  d.delta_percent = 100.0 * (sample_mean(ga) - mb) / mb;
  d.welch = welch_t(ga, gb);
  d.p = d.welch.p;
  return d;
}

std::vector<DeltaResult> significance_matrix(const RunSet& runs, int threads) {
  if (runs.groups.size() < 2) throw DegenerateInputError("significance matrix needs at least two groups");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < runs.groups.size(); ++i)
    for (std::size_t j = i + 1; j < runs.groups.size(); ++j) pairs.emplace_back(i, j);
  std::vector<DeltaResult> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    out[k] = relative_delta(runs, runs.groups[pairs[k].first].first, runs.groups[pairs[k].second].first);
  });
  return out;
}

std::string format_p(double p) {
  if (p < 0.001) return "<0.001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  return buf;
}

InterpolatedPerf interpolate_scaled(MeanStd small, MeanStd large, double n_small, double n_large, double s) {
  if (!(n_small > 0.0) || !(n_large > n_small)) throw RangeError("need 0 < n_small < n_large");
  const double max_scale = n_large / n_small;
  if (!(s >= 1.0 && s <= max_scale)) throw RangeError("scale factor outside [1, n_large / n_small]");
  InterpolatedPerf r;
  r.scale = s;
  if (s == 1.0) {
    r.lambda = 0.0;
    r.mean = small.mean;
    r.std = small.std;
    return r;
  }
  if (s == max_scale) {
    r.lambda = 1.0;
    r.mean = large.mean;
    r.std = large.std;
    return r;
  }
  r.lambda = std::log(s) / std::log(max_scale);
  const double l = r.lambda;
  r.mean = (1.0 - l) * small.mean + l * large.mean;
  r.std = std::sqrt((1.0 - l) * (1.0 - l) * small.std * small.std + l * l * large.std * large.std);
  return r;
}

double running_mean_at(std::span<const double> series, std::size_t window, std::size_t e) {
  double s = 0.0;
  for (std::size_t k = e + 1 - window; k <= e; ++k) s += series[k];
  return s / static_cast<double>(window);
}

Convergence time_to_convergence(std::span<const double> series, std::size_t window, double tolerance) {
  if (window < 1) throw RangeError("window must be at least 1");
  if (!(tolerance >= 0.0)) throw RangeError("tolerance must be non-negative");
  if (series.size() < window) throw DegenerateInputError("series shorter than the running-mean window");
  for (double x : series)
    if (!std::isfinite(x)) throw NumericError("series contains non-finite values");

  std::vector<double> rm(series.size() - window + 1);
  for (std::size_t k = 0; k < rm.size(); ++k) rm[k] = running_mean_at(series, window, k + window - 1);
  const double best = *std::ranges::max_element(rm);

  // Scan backwards for the start of the final run of within-tolerance epochs.
  std::size_t start = rm.size();
  while (start > 0 && best - rm[start - 1] <= tolerance) --start;

  Convergence c;
  c.best_running_mean = best;
  if (start == rm.size()) {
    c.forced = true;
    c.epoch = series.size() - 1;
    c.running_mean = rm.back();
  } else {
    c.epoch = start + window - 1;
    c.running_mean = rm[start];
  }
  return c;
}

double task_complexity(std::uint64_t n_examples, std::uint64_t n_classes) {
  if (n_classes == 0) throw DegenerateInputError("task needs at least one class");
  if (n_examples == 0) throw DegenerateInputError("task needs at least one example");
  return static_cast<double>(n_examples) / static_cast<double>(n_classes);
}

}  // namespace xferlens

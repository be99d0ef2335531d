#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xferlens/json.hpp"

namespace xferlens {

double accuracy(std::uint64_t correct, std::uint64_t total);
double dice(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);
/// Mann-Whitney estimate of the ROC AUC; tied scores earn half credit.
double auc(std::span<const double> scores, std::span<const int> labels);

double sample_mean(std::span<const double> v);
/// Unbiased (n - 1) standard deviation.
double sample_std(std::span<const double> v);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
  double mean_a = 0.0, mean_b = 0.0;
  double std_a = 0.0, std_b = 0.0;
  std::size_t n_a = 0, n_b = 0;
};

/// Two-sided Student-t tail probability 2 (1 - F(|t|; dof)).
double student_t_two_sided_p(double t, double dof);

WelchResult welch_t(std::span<const double> a, std::span<const double> b);

struct RunSet {
  std::string task_id;
  std::string metric;  // accuracy | auc | dice | other
  std::vector<std::pair<std::string, std::vector<double>>> groups;
  std::optional<std::uint64_t> n_train_examples;
  std::optional<std::uint64_t> n_classes;

  const std::vector<double>& group(const std::string& id) const;
};

/// Group order follows the file.
RunSet parse_runset(const Json& doc);
RunSet load_runset(const std::filesystem::path& path);

struct DeltaResult {
  std::string group_a, group_b;
  double delta_percent = 0.0;
  double p = 1.0;
  WelchResult welch;
};

/// 100 (mean_a - mean_b) / mean_b with the Welch p-value of the two groups.
DeltaResult relative_delta(const RunSet& runs, const std::string& a, const std::string& b);

/// One entry per unordered pair (row i, column j > i) in group order.
std::vector<DeltaResult> significance_matrix(const RunSet& runs, int threads = 1);

/// "<0.001" below one in a thousand, otherwise the value at three decimals.
std::string format_p(double p);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct InterpolatedPerf {
  double mean = 0.0;
  double std = 0.0;
  double scale = 1.0;
  double lambda = 0.0;
};

/// Interpolates linearly in log dataset size between the small and large
/// dataset results at an effective size of s * n_small.
InterpolatedPerf interpolate_scaled(MeanStd small, MeanStd large, double n_small, double n_large, double s);

struct Convergence {
  std::size_t epoch = 0;
  bool forced = false;
  double running_mean = 0.0;
  double best_running_mean = 0.0;
};

/// Mean of series[e - window + 1 .. e].
double running_mean_at(std::span<const double> series, std::size_t window, std::size_t e);

/// First epoch from which the trailing running mean stays within
/// `tolerance` of its overall maximum.
Convergence time_to_convergence(std::span<const double> series, std::size_t window, double tolerance);

/// Labeled examples per target class.
double task_complexity(std::uint64_t n_examples, std::uint64_t n_classes);

}  // namespace xferlens

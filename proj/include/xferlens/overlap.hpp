#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "xferlens/json.hpp"

namespace xferlens {

/// Per-model, per-datapoint correctness, one row per model.
class CorrectnessMatrix {
 public:
  static constexpr std::size_t kMaxModels = 16;

  CorrectnessMatrix(std::vector<std::string> model_ids, std::vector<std::vector<std::uint8_t>> rows);

  std::size_t models() const { return model_ids_.size(); }
  std::size_t datapoints() const { return rows_.empty() ? 0 : rows_.front().size(); }
  const std::vector<std::string>& model_ids() const { return model_ids_; }
  bool correct(std::size_t model, std::size_t point) const { return rows_[model][point] != 0; }
  double accuracy(std::size_t model) const;

 private:
  std::vector<std::string> model_ids_;
  std::vector<std::vector<std::uint8_t>> rows_;
};

/// Fractions keyed by model-subset bitmask; bit m set means model m was
/// correct. Index 0 is "no model correct".
struct OverlapHistogram {
  std::vector<std::string> model_ids;
  std::vector<double> observed;
  std::vector<double> expected;
  std::vector<double> accuracies;
  std::uint64_t n_datapoints = 0;

  std::size_t cells() const { return observed.empty() ? expected.size() : observed.size(); }
  /// Cell of datapoints solved by model m alone.
  std::uint32_t singleton(std::size_t m) const { return std::uint32_t{1} << m; }
};

/// Human-readable cell label, e.g. "none" or "A+C".
std::string cell_label(const std::vector<std::string>& model_ids, std::uint32_t mask);

OverlapHistogram exclusive_fractions(const CorrectnessMatrix& c);

/// Cell probabilities when each model is correct independently with its
/// own accuracy.
OverlapHistogram expected_independent(const std::vector<std::pair<std::string, double>>& accuracies);

/// Observed cells with the independence baseline from each row's accuracy.
OverlapHistogram overlap_report(const CorrectnessMatrix& c);

CorrectnessMatrix parse_correctness(const Json& doc);
/// Structured text ({models, correct}) or a TNSR u8 matrix whose row names
/// come from `sidecar` (default: the tensor path with extension ".json").
CorrectnessMatrix load_correctness(const std::filesystem::path& path, const std::filesystem::path& sidecar = {});

}  // namespace xferlens

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xferlens/tensor.hpp"

namespace xferlens {

struct CompressibilityProbe {
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0.0;
};

/// Size of the payload after gzip at level 9 with a zero timestamp,
/// including the gzip header and trailer.
CompressibilityProbe compressibility(std::span<const std::byte> payload);

/// Image quantized into equal-width bins spanning its own [min, max].
struct BinnedImage {
  int bins = 0;
  std::vector<std::uint16_t> index;   // bin of each pixel
  std::vector<std::uint32_t> counts;  // marginal histogram
  double entropy_bits = 0.0;
};

BinnedImage bin_image(std::span<const double> values, int bins);
BinnedImage bin_image(const Tensor& image, int bins);

struct MiEstimate {
  int bins = 0;
  double mi_bits = 0.0;
  double h_a_bits = 0.0;
  double h_b_bits = 0.0;
};

/// Plug-in mutual information of a joint histogram, in bits.
MiEstimate mutual_information(const BinnedImage& a, const BinnedImage& b);
MiEstimate mutual_information(const Tensor& a, const Tensor& b, int bins = 64);

struct UtilityValue {
  double u = 0.0;
  double mi = 0.0;
  double mi_min = 0.0;
  double mi_max = 0.0;
};

struct UtilityOptions {
  int bins = 64;
  /// Reference slices entering the MI_min average; larger references are
  /// subsampled at evenly spaced indices.
  std::size_t reference_cap = 256;
};

/// Normalization constants of one slice against a reference volume:
/// mi_max = MI(slice, slice), mi_min = mean MI(slice, r) over reference r.
struct UtilityBasis {
  BinnedImage image;
  double mi_max = 0.0;
  double mi_min = 0.0;
};

UtilityBasis utility_basis(const BinnedImage& slice, std::span<const BinnedImage> reference);
UtilityValue utility(const UtilityBasis& basis, const BinnedImage& other);

/// U = clamp(1 - (MI(i,j) - MI_min) / (MI_max - MI_min), 0, 1).
UtilityValue utility(const Tensor& slice_i, const Tensor& slice_j, const VolumeStack& reference,
                     const UtilityOptions& options = {});

struct VolumeBreakdown {
  std::string volume_id;
  std::size_t slices = 0;
  double weight = 0.0;
  double value = 0.0;         // c_corr/c_random (lower bound) or mean worst utility (upper bound)
  double c_corr = 0.0;        // lower bound only
  double c_random = 0.0;      // lower bound only
  std::string reference_id;   // upper bound only
};

enum class BoundKind { lower_bound, upper_bound };

struct ScaleFactorReport {
  BoundKind kind = BoundKind::lower_bound;
  double value = 0.0;
  /// Upper bound: mean worst-case utility before taking the reciprocal.
  double mean_worst_utility = 0.0;
  std::vector<VolumeBreakdown> per_volume;
  std::uint64_t seed = 0;
  int bins = 0;
  int window = 0;
  int random_sets = 0;
  std::vector<std::string> warnings;
};

struct LowerBoundConfig {
  int n_random_sets = 16;
  std::uint64_t seed = 0;
};

struct UpperBoundConfig {
  int window = 10;
  std::uint64_t seed = 0;
  UtilityOptions utility;
};

ScaleFactorReport slb(const std::vector<VolumeStack>& volumes, const LowerBoundConfig& cfg, int threads = 1);
ScaleFactorReport sub(const std::vector<VolumeStack>& volumes, const UpperBoundConfig& cfg, int threads = 1);

/// Index of the reference volume paired with volume `v` for seed `seed`.
std::size_t reference_volume_index(std::size_t v, std::size_t volume_count, std::uint64_t seed);

struct UtilityCurvePoint {
  int frame_distance = 0;
  double mean_u = 0.0;
  std::size_t pairs = 0;
};

struct UtilityCurve {
  std::vector<UtilityCurvePoint> points;
  std::vector<std::string> warnings;
};

UtilityCurve utility_curve(const VolumeStack& volume, const VolumeStack& reference, int max_distance,
                           const UtilityOptions& options = {});

}  // namespace xferlens

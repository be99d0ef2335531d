#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xferlens/manifest.hpp"
#include "xferlens/simkit.hpp"
#include "xferlens/tensor.hpp"

namespace xferlens {

/// One convolution layer, shape [filters, in_channels, kh, kw].
struct ConvLayerWeights {
  std::string layer_id;
  Tensor tensor;
};

struct LayerReuse {
  std::string layer_id;
  double cka = 0.0;
};

struct ReuseReport {
  std::vector<LayerReuse> layers;
  CkaConfig config;
};

struct UniquenessConfig {
  int n_splits = 8;
  int n_repeats = 20;
  std::uint64_t seed = 0;
  CkaConfig cka;
};

struct UniquenessReport {
  std::string layer_id;
  int n_splits = 0;
  int n_repeats = 0;
  std::uint64_t seed = 0;
  std::size_t n_pairs = 0;
  double mean_pairwise_cka = 0.0;
  double uniqueness = 0.0;
};

/// Filters become rows; each row is the flattened in_channels*kh*kw kernel.
FeatureMatrix<double> layer_feature_matrix(const ConvLayerWeights& w);

/// Per-layer CKA between pretrained and finetuned weights, pairing layers by
/// id in the order of `pre`.
ReuseReport feature_reuse(const std::vector<ConvLayerWeights>& pre, const std::vector<ConvLayerWeights>& post,
                          const CkaConfig& cfg, int threads = 1);

/// Filter indices of each segment for one repeat: a seeded shuffle cut into
/// `n_splits` near-equal contiguous pieces (larger pieces first).
std::vector<std::vector<std::size_t>> uniqueness_segments(std::size_t filters, int n_splits, std::uint64_t repeat_seed);

/// 1 - mean CKA over all segment pairs. Segments are compared as feature
/// subsets: rows are the kernel positions, columns the segment's filters.
UniquenessReport feature_uniqueness(const ConvLayerWeights& w, const UniquenessConfig& cfg, int threads = 1);

/// Weights manifest entries in network order (attribute `order`).
std::vector<ConvLayerWeights> load_layers(const Manifest& manifest);

}  // namespace xferlens

#include "xferlens/reuse.hpp"

#include <algorithm>

#include "xferlens/errors.hpp"
#include "xferlens/parallel.hpp"
#include "xferlens/random.hpp"

namespace xferlens {
namespace {

void validate_layer(const ConvLayerWeights& w) {
  if (w.tensor.ndim() != 4)
    throw ShapeError("layer '" + w.layer_id + "' must be 4D [filters, in_channels, kh, kw]");
  if (w.tensor.shape()[0] < 2) throw DegenerateInputError("layer '" + w.layer_id + "' has fewer than two filters");
}

}  // namespace

FeatureMatrix<double> layer_feature_matrix(const ConvLayerWeights& w) {
  validate_layer(w);
  return w.tensor.as_matrix();
}

ReuseReport feature_reuse(const std::vector<ConvLayerWeights>& pre, const std::vector<ConvLayerWeights>& post,
                          const CkaConfig& cfg, int threads) {
  if (pre.size() != post.size()) throw PairingError("pre and post list different numbers of layers");
  std::vector<const ConvLayerWeights*> partner(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const auto it = std::ranges::find(post, pre[i].layer_id, &ConvLayerWeights::layer_id);
    if (it == post.end()) throw PairingError("layer '" + pre[i].layer_id + "' has no finetuned counterpart");
    if (it->tensor.shape() != pre[i].tensor.shape())
      throw PairingError("layer '" + pre[i].layer_id + "' changed shape between pre and post");
    partner[i] = &*it;
  }

  ReuseReport report;
  report.config = cfg;
  report.layers.resize(pre.size());
  parallel_for(pre.size(), threads, [&](std::size_t i) {
    report.layers[i] = {pre[i].layer_id, cka(layer_feature_matrix(pre[i]), layer_feature_matrix(*partner[i]), cfg)};
  });
  return report;
}

std::vector<std::vector<std::size_t>> uniqueness_segments(std::size_t filters, int n_splits,
                                                          std::uint64_t repeat_seed) {
  const auto perm = seeded_permutation(filters, repeat_seed);
  const auto splits = static_cast<std::size_t>(n_splits);
  std::vector<std::vector<std::size_t>> segments(splits);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < splits; ++s) {
    const std::size_t len = filters / splits + (s < filters % splits ? 1 : 0);
    segments[s].assign(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                       perm.begin() + static_cast<std::ptrdiff_t>(offset + len));
    offset += len;
  }
  return segments;
}

UniquenessReport feature_uniqueness(const ConvLayerWeights& w, const UniquenessConfig& cfg, int threads) {
  validate_layer(w);
  if (cfg.n_splits < 2) throw RangeError("n_splits must be at least 2");
  if (cfg.n_repeats < 1) throw RangeError("n_repeats must be at least 1");
  const std::size_t filters = w.tensor.shape()[0];
  if (filters < 2 * static_cast<std::size_t>(cfg.n_splits))
    throw DegenerateInputError("layer '" + w.layer_id + "' has too few filters for " + std::to_string(cfg.n_splits) +
                               " splits");

  const FeatureMatrix<double> features = layer_feature_matrix(w);
  const auto splits = static_cast<std::size_t>(cfg.n_splits);
  const std::size_t pairs_per_repeat = splits * (splits - 1) / 2;

  // Per-repeat sums are combined in repeat order afterwards.
  std::vector<double> repeat_sums(static_cast<std::size_t>(cfg.n_repeats), 0.0);
  parallel_for(repeat_sums.size(), threads, [&](std::size_t r) {
    const auto segments = uniqueness_segments(filters, cfg.n_splits, mix_seed(cfg.seed, r));
    double sum = 0.0;
    for (std::size_t a = 0; a < splits; ++a)
      for (std::size_t b = a + 1; b < splits; ++b) {
        // Kernel positions are the shared examples; a segment's filters are
        // its features.
        const std::size_t m = std::min(segments[a].size(), segments[b].size());
        FeatureMatrix<double> xa(features.cols(), static_cast<Eigen::Index>(m));
        FeatureMatrix<double> xb(features.cols(), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
          xa.col(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(segments[a][i])).transpose();
          xb.col(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(segments[b][i])).transpose();
        }
        sum += cka(xa, xb, cfg.cka);
      }
    repeat_sums[r] = sum;
  });

  double total = 0.0;
  for (double s : repeat_sums) total += s;
  UniquenessReport report;
  report.layer_id = w.layer_id;
  report.n_splits = cfg.n_splits;
  report.n_repeats = cfg.n_repeats;
  report.seed = cfg.seed;
  report.n_pairs = pairs_per_repeat * repeat_sums.size();
  report.mean_pairwise_cka = total / static_cast<double>(report.n_pairs);
  report.uniqueness = std::clamp(1.0 - report.mean_pairwise_cka, 0.0, 1.0);
  return report;
}

std::vector<ConvLayerWeights> load_layers(const Manifest& manifest) {
  if (manifest.kind != ManifestKind::weights) throw SchemaError("expected a weights manifest");
  std::vector<const ManifestEntry*> ordered;
  for (const auto& e : manifest.entries) ordered.push_back(&e);
  std::ranges::stable_sort(ordered, {}, [](const ManifestEntry* e) { return e->attributes["order"].get<long long>(); });
  std::vector<ConvLayerWeights> layers;
  for (const auto* e : ordered) {
    ConvLayerWeights w{e->id, read_tensor(e->path)};
    if (w.tensor.ndim() != 4) throw SchemaError("weights entry '" + e->id + "' is not a 4D tensor");
    layers.push_back(std::move(w));
  }
  return layers;
}

}  // namespace xferlens

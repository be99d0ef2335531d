#include "xferlens/infocontent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <zlib.h>

#include "xferlens/errors.hpp"
#include "xferlens/parallel.hpp"
#include "xferlens/random.hpp"

namespace xferlens {
namespace {

std::uint64_t gzip_size(std::span<const std::byte> payload) {
  z_stream zs{};
  // windowBits 15 + 16 selects the gzip wrapper; zlib writes mtime = 0.
  if (deflateInit2(&zs, 9, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw NumericError("deflateInit2 failed");
  std::vector<unsigned char> out(deflateBound(&zs, static_cast<uLong>(payload.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(payload.data()));
  zs.avail_in = static_cast<uInt>(payload.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::uint64_t total = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw NumericError("deflate did not finish in one pass");
  return total;
}

std::vector<std::byte> concat_slices(const std::vector<const Tensor*>& slices) {
  std::size_t n = 0;
  for (const auto* s : slices) n += s->bytes().size();
  std::vector<std::byte> out;
  out.reserve(n);
  for (const auto* s : slices) out.insert(out.end(), s->bytes().begin(), s->bytes().end());
  return out;
}

double ratio_of(const std::vector<const Tensor*>& slices) { return compressibility(concat_slices(slices)).ratio; }

std::vector<const BinnedImage*> capped(std::span<const BinnedImage> reference, std::size_t cap) {
  std::vector<const BinnedImage*> out;
  const std::size_t n = reference.size();
  if (cap == 0 || n <= cap) {
    for (const auto& r : reference) out.push_back(&r);
  } else {
    for (std::size_t k = 0; k < cap; ++k) out.push_back(&reference[k * n / cap]);
  }
  return out;
}

std::vector<BinnedImage> bin_all(const VolumeStack& v, int bins) {
  std::vector<BinnedImage> out;
  out.reserve(v.slices.size());
  for (const auto& s : v.slices) out.push_back(bin_image(s, bins));
  return out;
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("images differ in shape");
}

}  // namespace

CompressibilityProbe compressibility(std::span<const std::byte> payload) {
  if (payload.empty()) throw DegenerateInputError("cannot probe compressibility of an empty payload");
  CompressibilityProbe p;
  p.original_bytes = payload.size();
  p.compressed_bytes = gzip_size(payload);
  p.ratio = static_cast<double>(p.original_bytes) / static_cast<double>(p.compressed_bytes);
  return p;
}

BinnedImage bin_image(std::span<const double> values, int bins) {
  if (bins < 2 || bins > std::numeric_limits<std::uint16_t>::max()) throw RangeError("bins must be in [2, 65535]");
  if (values.empty()) throw DegenerateInputError("empty image");
  const auto [lo_it, hi_it] = std::ranges::minmax_element(values);
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  if (!std::isfinite(lo) || !std::isfinite(span)) throw NumericError("image contains non-finite values");

  BinnedImage b;
  b.bins = bins;
  b.index.resize(values.size());
  b.counts.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    int k = 0;
    if (span > 0.0) k = std::min(bins - 1, static_cast<int>((values[i] - lo) / span * bins));
    b.index[i] = static_cast<std::uint16_t>(k);
    ++b.counts[static_cast<std::size_t>(k)];
  }
  const double n = static_cast<double>(values.size());
  for (auto c : b.counts)
    if (c > 0) b.entropy_bits += (c / n) * std::log2(n / c);
  return b;
}

BinnedImage bin_image(const Tensor& image, int bins) {
  if (image.ndim() != 2) throw ShapeError("image must be 2D");
  const auto v = image.to_f64();
  return bin_image(std::span<const double>(v), bins);
}

MiEstimate mutual_information(const BinnedImage& a, const BinnedImage& b) {
  if (a.index.size() != b.index.size()) throw ShapeError("images differ in pixel count");
  if (a.bins != b.bins) throw ShapeError("images binned differently");
  const auto nb = static_cast<std::size_t>(a.bins);
  std::vector<std::uint32_t> joint(nb * nb, 0);
  for (std::size_t i = 0; i < a.index.size(); ++i) ++joint[a.index[i] * nb + b.index[i]];

  const double n = static_cast<double>(a.index.size());
  double mi = 0.0;
  for (std::size_t x = 0; x < nb; ++x)
    for (std::size_t y = 0; y < nb; ++y) {
      const double c = joint[x * nb + y];
      if (c == 0) continue;
      // p log2(p / (pa pb)) written on counts: (c/n) log2(c n / (ca cb))
      mi += (c / n) * std::log2((c * n) / (static_cast<double>(a.counts[x]) * static_cast<double>(b.counts[y])));
    }
  return {a.bins, std::max(0.0, mi), a.entropy_bits, b.entropy_bits};
}

MiEstimate mutual_information(const Tensor& a, const Tensor& b, int bins) {
  require_same_shape(a, b);
  return mutual_information(bin_image(a, bins), bin_image(b, bins));
}

UtilityBasis utility_basis(const BinnedImage& slice, std::span<const BinnedImage> reference) {
  if (reference.empty()) throw DegenerateInputError("reference volume is empty");
  UtilityBasis basis{slice, mutual_information(slice, slice).mi_bits, 0.0};
  double sum = 0.0;
  for (const auto& r : reference) sum += mutual_information(slice, r).mi_bits;
  basis.mi_min = sum / static_cast<double>(reference.size());
  return basis;
}

UtilityValue utility(const UtilityBasis& basis, const BinnedImage& other) {
  const double range = basis.mi_max - basis.mi_min;
  if (range <= 1e-12)
    throw DegenerateInputError("slice carries no more information about itself than about the reference");
  const double mi = mutual_information(basis.image, other).mi_bits;
  return {std::clamp(1.0 - (mi - basis.mi_min) / range, 0.0, 1.0), mi, basis.mi_min, basis.mi_max};
}

UtilityValue utility(const Tensor& slice_i, const Tensor& slice_j, const VolumeStack& reference,
                     const UtilityOptions& options) {
  require_same_shape(slice_i, slice_j);
  if (reference.slices.empty()) throw DegenerateInputError("reference volume is empty");
  require_same_shape(slice_i, reference.slices.front());
  const auto ref = bin_all(reference, options.bins);
  std::vector<BinnedImage> used;
  for (const auto* r : capped(ref, options.reference_cap)) used.push_back(*r);
  return utility(utility_basis(bin_image(slice_i, options.bins), used), bin_image(slice_j, options.bins));
}

ScaleFactorReport slb(const std::vector<VolumeStack>& volumes, const LowerBoundConfig& cfg, int threads) {
  if (volumes.size() < 2) throw DegenerateInputError("lower bound needs at least two volumes");
  if (cfg.n_random_sets < 1) throw RangeError("n_random_sets must be at least 1");

  std::vector<const Tensor*> pool;
  std::size_t largest = 0;
  for (const auto& v : volumes) {
    largest = std::max(largest, v.slice_count());
    for (const auto& s : v.slices) pool.push_back(&s);
  }
  if (pool.size() < 2 * largest)
    throw DegenerateInputError("total slice count must be at least twice the largest volume");

  ScaleFactorReport report;
  report.kind = BoundKind::lower_bound;
  report.seed = cfg.seed;
  report.random_sets = cfg.n_random_sets;
  report.per_volume.resize(volumes.size());

  parallel_for(volumes.size(), threads, [&](std::size_t i) {
    const auto& v = volumes[i];
    std::vector<const Tensor*> own;
    for (const auto& s : v.slices) own.push_back(&s);
    const double c_corr = ratio_of(own);

    Rng rng(mix_seed(cfg.seed, i));
    double sum = 0.0;
    for (int set = 0; set < cfg.n_random_sets; ++set) {
      std::vector<const Tensor*> draw;
      for (auto k : sample_without_replacement(pool.size(), v.slice_count(), rng)) draw.push_back(pool[k]);
      sum += ratio_of(draw);
    }
    auto& b = report.per_volume[i];
    b.volume_id = v.volume_id;
    b.slices = v.slice_count();
    b.weight = static_cast<double>(v.slice_count()) / static_cast<double>(pool.size());
    b.c_corr = c_corr;
    b.c_random = sum / cfg.n_random_sets;
    b.value = b.c_corr / b.c_random;
  });

  for (const auto& b : report.per_volume) report.value += b.weight * b.value;
  return report;
}

std::size_t reference_volume_index(std::size_t v, std::size_t volume_count, std::uint64_t seed) {
  Rng rng(mix_seed(seed, v));
  const std::size_t k = rng.below(volume_count - 1);
  return k >= v ? k + 1 : k;
}

ScaleFactorReport sub(const std::vector<VolumeStack>& volumes, const UpperBoundConfig& cfg, int threads) {
  if (volumes.size() < 2) throw DegenerateInputError("upper bound needs at least two volumes");
  if (cfg.window < 1) throw RangeError("window must be at least 1");

  ScaleFactorReport report;
  report.kind = BoundKind::upper_bound;
  report.seed = cfg.seed;
  report.bins = cfg.utility.bins;
  report.window = cfg.window;
  report.per_volume.resize(volumes.size());
  std::vector<double> utility_sums(volumes.size(), 0.0);
  std::vector<std::vector<std::string>> warnings(volumes.size());

  parallel_for(volumes.size(), threads, [&](std::size_t v) {
    const auto& volume = volumes[v];
    const auto& reference = volumes[reference_volume_index(v, volumes.size(), cfg.seed)];
    if (reference.slices.front().shape() != volume.slices.front().shape())
      throw ShapeError("volume " + volume.volume_id + " and its reference differ in slice shape");
    const auto binned = bin_all(volume, cfg.utility.bins);
    const auto ref_all = bin_all(reference, cfg.utility.bins);
    std::vector<BinnedImage> ref;
    for (const auto* r : capped(ref_all, cfg.utility.reference_cap)) ref.push_back(*r);

    double sum = 1.0;  // first slice: nothing to be redundant with yet
    for (std::size_t i = 1; i < binned.size(); ++i) {
      const auto basis = utility_basis(binned[i], ref);
      const std::size_t first = i > static_cast<std::size_t>(cfg.window) ? i - cfg.window : 0;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t j = first; j < i; ++j) {
        try {
          worst = std::min(worst, utility(basis, binned[j]).u);
        } catch (const DegenerateInputError& e) {
          warnings[v].push_back(volume.volume_id + ": skipped slice pair (" + std::to_string(i) + ", " +
                                std::to_string(j) + "): " + e.what());
        }
      }
      if (!std::isfinite(worst))
        throw DegenerateInputError(volume.volume_id + ": no usable comparison for slice " + std::to_string(i));
      sum += worst;
    }
    utility_sums[v] = sum;
    auto& b = report.per_volume[v];
    b.volume_id = volume.volume_id;
    b.slices = volume.slice_count();
    b.value = sum / static_cast<double>(volume.slice_count());
    b.reference_id = reference.volume_id;
  });

  std::size_t total = 0;
  for (const auto& v : volumes) total += v.slice_count();
  double sum = 0.0;
  for (std::size_t v = 0; v < volumes.size(); ++v) {
    sum += utility_sums[v];
    report.per_volume[v].weight = static_cast<double>(volumes[v].slice_count()) / static_cast<double>(total);
    for (auto& w : warnings[v]) report.warnings.push_back(std::move(w));
  }
  report.mean_worst_utility = sum / static_cast<double>(total);
  report.value = 1.0 / report.mean_worst_utility;
  return report;
}

UtilityCurve utility_curve(const VolumeStack& volume, const VolumeStack& reference, int max_distance,
                           const UtilityOptions& options) {
  if (volume.slice_count() < 2) throw DegenerateInputError("utility curve needs at least two slices");
  if (max_distance < 1) throw RangeError("max_distance must be at least 1");
  if (reference.slices.empty()) throw DegenerateInputError("reference volume is empty");
  if (reference.slices.front().shape() != volume.slices.front().shape())
    throw ShapeError("volume and reference differ in slice shape");

  UtilityCurve curve;
  const auto n = static_cast<int>(volume.slice_count());
  if (max_distance >= n) {
    curve.warnings.push_back("max_distance " + std::to_string(max_distance) + " truncated to " +
                             std::to_string(n - 1));
    max_distance = n - 1;
  }
  const auto binned = bin_all(volume, options.bins);
  const auto ref_all = bin_all(reference, options.bins);
  std::vector<BinnedImage> ref;
  for (const auto* r : capped(ref_all, options.reference_cap)) ref.push_back(*r);
  std::vector<UtilityBasis> bases;
  bases.reserve(binned.size());
  for (const auto& b : binned) bases.push_back(utility_basis(b, ref));

  for (int d = 1; d <= max_distance; ++d) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (int i = 0; i + d < n; ++i) {
      sum += utility(bases[static_cast<std::size_t>(i)], binned[static_cast<std::size_t>(i + d)]).u;
      ++pairs;
    }
    curve.points.push_back({d, sum / static_cast<double>(pairs), pairs});
  }
  return curve;
}

}  // namespace xferlens

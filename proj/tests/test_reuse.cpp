#include <doctest.h>

#include <Eigen/QR>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "xferlens/reuse.hpp"

using namespace xferlens;

namespace {

const std::filesystem::path kFixtures = XFERLENS_FIXTURES;

ConvLayerWeights gaussian_layer(const std::string& id, std::uint64_t filters, std::uint64_t c, std::uint64_t k,
                                std::uint64_t seed) {
  Rng rng(seed);
  return {id, synthetic::conv_weights(filters, c, k, rng)};
}

// Uniqueness recomputed from its definition: same seeded shuffles, naive CKA.
double uniqueness_oracle(const ConvLayerWeights& w, int splits, int repeats, std::uint64_t seed, bool rbf) {
  const std::size_t filters = w.tensor.shape()[0];
  const std::size_t p = w.tensor.size() / filters;
  double sum = 0.0;
  int pairs = 0;
  for (int r = 0; r < repeats; ++r) {
    const auto perm = seeded_permutation(filters, mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<std::vector<std::size_t>> seg(static_cast<std::size_t>(splits));
    std::size_t pos = 0;
    for (int s = 0; s < splits; ++s) {
      const std::size_t len = filters / splits + (static_cast<std::size_t>(s) < filters % splits ? 1 : 0);
      for (std::size_t i = 0; i < len; ++i) seg[static_cast<std::size_t>(s)].push_back(perm[pos++]);
    }
    for (int a = 0; a < splits; ++a)
      for (int b = a + 1; b < splits; ++b) {
        const auto& sa = seg[static_cast<std::size_t>(a)];
        const auto& sb = seg[static_cast<std::size_t>(b)];
        const std::size_t m = std::min(sa.size(), sb.size());
        // one row per kernel position, one column per filter of the segment
        oracle::Mat xa(p, std::vector<double>(m)), xb(p, std::vector<double>(m));
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t f = 0; f < p; ++f) {
            xa[f][i] = w.tensor.at(sa[i] * p + f);
            xb[f][i] = w.tensor.at(sb[i] * p + f);
          }
        sum += std::clamp(oracle::cka(xa, xb, rbf), 0.0, 1.0);
        ++pairs;
      }
  }
  return 1.0 - sum / pairs;
}

}  // namespace

TEST_CASE("layer_feature_matrix") {
  const auto w = gaussian_layer("c", 4, 3, 7, 1);
  const auto x = layer_feature_matrix(w);
  CHECK(x.rows() == 4);
  CHECK(x.cols() == 147);
  CHECK(x(2, 5) == w.tensor.at(2 * 147 + 5));

  ConvLayerWeights tiny{"t", Tensor(DType::f64, {2, 1, 1, 1})};
  tiny.tensor.set(0, 1.5);
  tiny.tensor.set(1, -2.25);
  const auto m = layer_feature_matrix(tiny);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(1, 0) == -2.25);

  ConvLayerWeights bytes{"u", Tensor(DType::u8, {2, 1, 2, 1})};
  for (std::size_t i = 0; i < 4; ++i) bytes.tensor.set(i, 250.0 + static_cast<double>(i));
  CHECK(layer_feature_matrix(bytes)(1, 1) == 253.0);

  ConvLayerWeights single{"s", Tensor(DType::f32, {1, 3, 3, 3})};
  CHECK_THROWS_AS(layer_feature_matrix(single), DegenerateInputError);
  ConvLayerWeights flat{"f", Tensor(DType::f32, {4, 9})};
  CHECK_THROWS_AS(layer_feature_matrix(flat), ShapeError);
}

TEST_CASE("feature_reuse") {
  const std::vector<ConvLayerWeights> pre = {gaussian_layer("conv1", 64, 3, 3, 10), gaussian_layer("conv2", 32, 8, 3, 11)};
  const CkaConfig rbf{KernelKind::rbf, 1.0};

  SUBCASE("frozen layers reuse exactly 1") {
    const auto r = feature_reuse(pre, pre, rbf);
    REQUIRE(r.layers.size() == 2);
    for (const auto& l : r.layers) CHECK(l.cka == 1.0);
  }

  SUBCASE("linear kernel is blind to a rotation of the flattened kernels") {
    Rng rng(12);
    std::vector<ConvLayerWeights> post = pre;
    for (auto& l : post) {
      const auto x = layer_feature_matrix(l);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(synthetic::gaussian_matrix(x.cols(), x.cols(), rng));
      const Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd rotated = x * q;
      l.tensor = synthetic::to_tensor(rotated, DType::f64, l.tensor.shape());
    }
    const auto r = feature_reuse(pre, post, {KernelKind::linear, 1.0});
    for (const auto& l : r.layers) CHECK(std::abs(l.cka - 1.0) <= 1e-8);
  }

  SUBCASE("independent weights match the oracle and are far from 1") {
    const std::vector<ConvLayerWeights> post = {gaussian_layer("conv1", 64, 3, 3, 20),
                                                gaussian_layer("conv2", 32, 8, 3, 21)};
    const auto r = feature_reuse(pre, post, rbf);
    for (std::size_t i = 0; i < 2; ++i) {
      const auto ox = oracle::to_mat(layer_feature_matrix(pre[i]));
      const auto oy = oracle::to_mat(layer_feature_matrix(post[i]));
      CHECK(std::abs(r.layers[i].cka - oracle::cka(ox, oy, true)) <= 1e-10);
      CHECK(r.layers[i].cka < 0.95);
    }
    const auto swapped = feature_reuse(post, pre, rbf);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(swapped.layers[i].cka - r.layers[i].cka) <= 1e-12);
  }

  SUBCASE("pairing errors") {
    std::vector<ConvLayerWeights> renamed = pre;
    renamed[1].layer_id = "conv9";
    CHECK_THROWS_AS(feature_reuse(pre, renamed, rbf), PairingError);
    std::vector<ConvLayerWeights> reshaped = pre;
    reshaped[0] = gaussian_layer("conv1", 64, 3, 5, 1);
    CHECK_THROWS_AS(feature_reuse(pre, reshaped, rbf), PairingError);
  }
}

TEST_CASE("uniqueness segments") {
  const auto seg = uniqueness_segments(19, 4, 99);
  REQUIRE(seg.size() == 4);
  CHECK(seg[0].size() == 5);
  CHECK(seg[3].size() == 4);
  std::vector<std::size_t> all;
  for (const auto& s : seg) all.insert(all.end(), s.begin(), s.end());
  std::ranges::sort(all);
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("feature_uniqueness") {
  const auto iid = gaussian_layer("iid", 128, 3, 3, 30);

  // 16 distinct filters, each repeated 8 times
  const auto base = gaussian_layer("base", 16, 3, 3, 31);
  ConvLayerWeights dup{"dup", Tensor(DType::f32, {128, 3, 3, 3})};
  for (std::size_t f = 0; f < 128; ++f)
    for (std::size_t i = 0; i < 27; ++i) dup.tensor.set(f * 27 + i, base.tensor.at((f % 16) * 27 + i));

  // 4 distinct filters, so every segment holds several copies of each
  ConvLayerWeights dup4{"dup4", Tensor(DType::f32, {128, 3, 3, 3})};
  for (std::size_t f = 0; f < 128; ++f)
    for (std::size_t i = 0; i < 27; ++i) dup4.tensor.set(f * 27 + i, base.tensor.at((f % 4) * 27 + i));

  UniquenessConfig cfg{8, 4, 1234, {KernelKind::rbf, 1.0}};
  const auto u_iid = feature_uniqueness(iid, cfg);
  const auto u_dup = feature_uniqueness(dup, cfg);
  const auto u_dup4 = feature_uniqueness(dup4, cfg);
  CHECK(std::abs(u_iid.uniqueness - uniqueness_oracle(iid, 8, 4, 1234, true)) <= 1e-10);
  CHECK(std::abs(u_dup.uniqueness - uniqueness_oracle(dup, 8, 4, 1234, true)) <= 1e-10);
  CHECK(std::abs(u_dup4.uniqueness - uniqueness_oracle(dup4, 8, 4, 1234, true)) <= 1e-10);
  CHECK(u_iid.uniqueness > u_dup.uniqueness);
  CHECK(u_dup.uniqueness > u_dup4.uniqueness);
  CHECK(u_dup4.uniqueness < 0.15);
  CHECK(u_iid.n_pairs == 28 * 4);
  CHECK(u_iid.uniqueness >= 0.0);
  CHECK(u_iid.uniqueness <= 1.0);
  CHECK(u_iid.uniqueness == doctest::Approx(1.0 - u_iid.mean_pairwise_cka));

  SUBCASE("deterministic and thread independent") {
    CHECK(feature_uniqueness(iid, cfg).uniqueness == u_iid.uniqueness);
    CHECK(feature_uniqueness(iid, cfg, 4).uniqueness == u_iid.uniqueness);
    UniquenessConfig other = cfg;
    other.seed = 4321;
    CHECK(feature_uniqueness(iid, other).uniqueness != u_iid.uniqueness);
  }

  SUBCASE("preconditions") {
    UniquenessConfig one = cfg;
    one.n_splits = 1;
    CHECK_THROWS_AS(feature_uniqueness(iid, one), RangeError);
    UniquenessConfig many = cfg;
    many.n_splits = 65;
    CHECK_THROWS_AS(feature_uniqueness(iid, many), DegenerateInputError);
    ConvLayerWeights same{"same", Tensor(DType::f32, {16, 1, 2, 2})};
    CHECK_THROWS_AS(feature_uniqueness(same, cfg), DegenerateInputError);
  }
}

TEST_CASE("duplicating every filter never increases uniqueness") {
  for (std::uint64_t seed : {40, 41, 42, 43, 44}) {
    const auto w = gaussian_layer("w", 32, 3, 3, seed);
    ConvLayerWeights doubled{"w2", Tensor(DType::f32, {64, 3, 3, 3})};
    for (std::size_t f = 0; f < 64; ++f)
      for (std::size_t i = 0; i < 27; ++i) doubled.tensor.set(f * 27 + i, w.tensor.at((f / 2) * 27 + i));
    UniquenessConfig cfg{4, 5, seed, {KernelKind::rbf, 1.0}};
    CHECK(feature_uniqueness(doubled, cfg).uniqueness <= feature_uniqueness(w, cfg).uniqueness);
  }
}

TEST_CASE("weights manifest order") {
  const auto layers = load_layers(load_manifest(kFixtures / "weights" / "pre.json"));
  REQUIRE(layers.size() == 4);
  CHECK(layers[0].layer_id == "conv1");
  CHECK(layers[3].layer_id == "conv4");
  CHECK(layers[2].tensor.shape() == std::vector<std::uint64_t>{64, 32, 3, 3});
}

// Regenerates the checked-in test fixtures under tests/fixtures.
//   gen_fixtures <output-dir>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "../tests/support/synthetic.hpp"
#include "xferlens/json.hpp"
#include "xferlens/tensor.hpp"

namespace fs = std::filesystem;
using namespace xferlens;

namespace {

void write_json(const fs::path& p, const Json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << j.dump(2) << "\n";
}

void write_bytes(const fs::path& p, const std::vector<std::byte>& b) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Tensor stack(const VolumeStack& v) {
  const auto& s0 = v.slices.front();
  Tensor t(s0.dtype(), {v.slices.size(), s0.shape()[0], s0.shape()[1]});
  std::size_t off = 0;
  for (const auto& s : v.slices) {
    std::ranges::copy(s.bytes(), t.bytes().begin() + static_cast<std::ptrdiff_t>(off));
    off += s.bytes().size();
  }
  return t;
}

void volume_set(const fs::path& dir, const std::string& name, const std::vector<VolumeStack>& vols) {
  Json m = {{"kind", "volumes"}, {"entries", Json::array()}};
  for (const auto& v : vols) {
    const auto rel = fs::path(name) / (v.volume_id + ".tnsr");
    fs::create_directories((dir / rel).parent_path());
    write_tensor(stack(v), dir / rel);
    m["entries"].push_back({{"id", v.volume_id}, {"path", rel.string()}, {"attributes", {{"slice_spacing_mm", 5.0}}}});
  }
  write_json(dir / (name + ".json"), m);
}

void weights(const fs::path& dir) {
  Rng rng(101);
  const std::vector<std::tuple<std::string, std::uint64_t, std::uint64_t, std::uint64_t>> layers = {
      {"conv1", 32, 3, 3}, {"conv2", 32, 32, 3}, {"conv3", 64, 32, 3}, {"conv4", 64, 64, 1}};
  Json pre = {{"kind", "weights"}, {"entries", Json::array()}};
  Json post = pre;
  Rng noise(202);
  // Listed out of order on purpose: `order` decides network order.
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& [id, f, c, ks] = layers[k];
    const Tensor w = synthetic::conv_weights(f, c, ks, rng);
    Tensor tuned = w;
    const double drift = 0.02 * static_cast<double>(k + 1);  // deeper layers move more
    for (std::size_t i = 0; i < tuned.size(); ++i) tuned.set(i, w.at(i) + drift * noise.normal());
    fs::create_directories(dir / "pre");
    fs::create_directories(dir / "post");
    write_tensor(w, dir / "pre" / (id + ".tnsr"));
    write_tensor(tuned, dir / "post" / (id + ".tnsr"));
    const Json attrs = {{"order", static_cast<int>(k)}};
    pre["entries"].push_back({{"id", id}, {"path", "pre/" + id + ".tnsr"}, {"attributes", attrs}});
    post["entries"].push_back({{"id", id}, {"path", "post/" + id + ".tnsr"}, {"attributes", attrs}});
  }
  write_json(dir / "pre.json", pre);
  write_json(dir / "post.json", post);
}

std::vector<std::vector<std::byte>> fuzz_corpus() {
  Tensor valid(DType::f32, {2, 3});
  for (std::size_t i = 0; i < 6; ++i) valid.set(i, static_cast<double>(i) * 0.5);
  const auto good = serialize_tensor(valid);
  std::vector<std::vector<std::byte>> cases;
  auto with = [&](std::size_t at, std::uint8_t v) {
    auto b = good;
    b[at] = std::byte{v};
    return b;
  };
  auto le64 = [](std::vector<std::byte>& b, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b[at + static_cast<std::size_t>(i)] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
  };

  for (std::size_t len = 0; len < 8; ++len) cases.emplace_back(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
  for (const char* magic : {"XXXX", "tnsr", "TNSQ", "NSRT"}) {
    auto b = good;
    for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::byte>(magic[i]);
    cases.push_back(b);
  }
  for (std::uint8_t v : {0, 2, 255}) cases.push_back(with(4, v));
  for (std::uint8_t v : {0, 6, 7, 128, 255}) cases.push_back(with(5, v));
  for (std::uint8_t v : {0, 9, 64, 255}) cases.push_back(with(6, v));
  for (std::uint8_t v : {1, 0x80, 0xFF}) cases.push_back(with(7, v));
  for (std::size_t len : {9, 15, 16, 23}) cases.emplace_back(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
  for (std::size_t d : {0, 1}) {
    auto b = good;
    le64(b, 8 + 8 * d, 0);
    cases.push_back(b);
  }
  {
    auto b = good;
    le64(b, 8, std::uint64_t{1} << 63);
    le64(b, 16, 4);
    cases.push_back(b);
  }
  {
    auto b = good;
    le64(b, 8, std::uint64_t{1} << 40);
    le64(b, 16, std::uint64_t{1} << 10);
    cases.push_back(b);
  }
  {
    auto b = good;
    le64(b, 8, ~std::uint64_t{0});
    cases.push_back(b);
  }
  for (std::size_t payload : {0, 1, 20, 23}) cases.emplace_back(good.begin(), good.begin() + 24 + static_cast<std::ptrdiff_t>(payload));
  for (std::size_t extra : {1, 8, 24}) {
    auto b = good;
    b.resize(b.size() + extra, std::byte{0x5A});
    cases.push_back(b);
  }
  for (std::uint8_t dtype : {1, 2, 3, 5}) cases.push_back(with(5, dtype));  // payload length no longer matches
  {
    // eight dimensions of 256: element count overflows 64 bits
    std::vector<std::byte> b(8 + 64);
    for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<std::byte>("TNSR"[i]);
    b[4] = std::byte{1};
    b[5] = std::byte{1};
    b[6] = std::byte{8};
    for (std::size_t d = 0; d < 8; ++d) le64(b, 8 + 8 * d, 256);
    cases.push_back(b);
  }
  {
    auto b = with(6, 3);  // claims a third dimension read from the payload
    cases.push_back(b);
  }
  {
    auto b = with(6, 1);  // one dimension of 2, payload sized for six
    cases.push_back(b);
  }

  // Seeded header corruptions, kept only when they are actually malformed.
  Rng rng(7);
  while (cases.size() < 72) {
    auto b = good;
    const std::size_t at = rng.below(24);
    b[at] = static_cast<std::byte>(rng.next() & 0xFF);
    if (rng.below(3) == 0) b.resize(rng.below(b.size()));
    try {
      parse_tensor(b);
    } catch (const Error&) {
      cases.push_back(b);
    }
  }
  return cases;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <output-dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out);

  {
    Rng rng(11);
    const Eigen::MatrixXd x = synthetic::gaussian_matrix(8, 4, rng);
    const Eigen::MatrixXd y = synthetic::gaussian_matrix(8, 4, rng);
    fs::create_directories(out / "cka");
    write_tensor(synthetic::to_tensor(x, DType::f64, {8, 4}), out / "cka" / "x.tnsr");
    write_tensor(synthetic::to_tensor(y, DType::f64, {8, 4}), out / "cka" / "y.tnsr");
  }

  weights(out / "weights");

  {
    std::vector<VolumeStack> ident, random;
    for (int v = 0; v < 6; ++v) ident.push_back(synthetic::identical_volume("ident" + std::to_string(v), 16, 1000 + v));
    for (int v = 0; v < 4; ++v) random.push_back(synthetic::random_volume("rand" + std::to_string(v), 16, 2000 + v));
    volume_set(out / "volumes", "identical", ident);
    volume_set(out / "volumes", "random", random);

    // Phantom scan stored as a directory of 2D slices, reference as one 3D file.
    const auto scan = synthetic::phantom_volume("scan", 24, 1);
    const auto ref = synthetic::phantom_volume("reference", 24, 2);
    const fs::path dir = out / "volumes" / "phantom" / "scan";
    fs::create_directories(dir);
    for (std::size_t i = 0; i < scan.slices.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "slice_%03zu.tnsr", i);
      write_tensor(scan.slices[i], dir / name);
    }
    write_tensor(stack(ref), out / "volumes" / "phantom" / "reference.tnsr");
    write_json(out / "volumes" / "phantom.json",
               {{"kind", "volumes"},
                {"entries",
                 {{{"id", "scan"}, {"path", "phantom/scan"}, {"attributes", {{"slice_spacing_mm", 5.0}}}},
                  {{"id", "reference"}, {"path", "phantom/reference.tnsr"}, {"attributes", {{"slice_spacing_mm", 5.0}}}}}}});
  }

  write_json(out / "runs" / "classification.json",
             {{"task", "imagenet-linear"},
              {"metric", "accuracy"},
              {"groups",
               {{"imagenet", {0.752, 0.748, 0.755, 0.750}},
                {"radnet-1.28m", {0.731, 0.736, 0.729, 0.734}},
                {"radnet-12m", {0.741, 0.744, 0.738, 0.745}},
                {"random-init", {0.601, 0.612, 0.596, 0.605}}}},
              {"n_train_examples", 1281167},
              {"n_classes", 1000}});

  write_json(out / "correctness" / "hand.json", {{"models", {"M1", "M2"}}, {"correct", {{1, 1, 1, 0}, {0, 1, 1, 1}}}});
  {
    Rng rng(31);
    const double acc[3] = {0.8, 0.7, 0.6};
    Tensor t(DType::u8, {3, 400});
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t i = 0; i < 400; ++i) t.set(m * 400 + i, rng.uniform() < acc[m] ? 1 : 0);
    write_tensor(t, out / "correctness" / "three.tnsr");
    write_json(out / "correctness" / "three.json", {{"models", {"imagenet", "radnet", "random-init"}}});
  }

  {
    Rng rng(41);
    Json series = Json::array();
    for (int e = 0; e < 60; ++e) series.push_back(0.9 * (1 - std::exp(-e / 8.0)) + 0.01 * rng.normal());
    write_json(out / "series" / "validation.json", series);
    write_json(out / "metrics" / "scores.json",
               {{"scores", {0.9, 0.8, 0.7, 0.55, 0.55, 0.3, 0.2, 0.1}}, {"labels", {1, 1, 0, 1, 0, 0, 1, 0}}});
  }

  write_json(out / "manifests" / "missing_spacing.json",
             {{"kind", "volumes"}, {"entries", {{{"id", "v1"}, {"path", "../volumes/random/rand0.tnsr"}}}}});
  write_json(out / "manifests" / "duplicate_id.json",
             {{"kind", "volumes"},
              {"entries",
               {{{"id", "v1"}, {"path", "../volumes/random/rand0.tnsr"}, {"attributes", {{"slice_spacing_mm", 5.0}}}},
                {{"id", "v1"}, {"path", "../volumes/random/rand1.tnsr"}, {"attributes", {{"slice_spacing_mm", 5.0}}}}}}});
  write_json(out / "manifests" / "dangling.json",
             {{"kind", "volumes"},
              {"entries", {{{"id", "v1"}, {"path", "nowhere.tnsr"}, {"attributes", {{"slice_spacing_mm", 5.0}}}}}}});

  const auto corpus = fuzz_corpus();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "case_%03zu.tnsr", i);
    write_bytes(out / "fuzz" / name, corpus[i]);
  }
  std::cout << "wrote fixtures to " << out << " (" << corpus.size() << " fuzz cases)\n";
  return 0;
}

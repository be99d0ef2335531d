#include "xferlens/overlap.hpp"

#include <set>

#include "xferlens/errors.hpp"
#include "xferlens/manifest.hpp"
#include "xferlens/tensor.hpp"

namespace xferlens {

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> model_ids, std::vector<std::vector<std::uint8_t>> rows)
    : model_ids_(std::move(model_ids)), rows_(std::move(rows)) {
  if (model_ids_.empty()) throw SchemaError("correctness matrix needs at least one model");
  if (model_ids_.size() > kMaxModels) throw SchemaError("at most 16 models are supported");
  if (model_ids_.size() != rows_.size()) throw SchemaError("model count does not match row count");
  if (std::set<std::string>(model_ids_.begin(), model_ids_.end()).size() != model_ids_.size())
    throw SchemaError("model ids must be unique");
  for (const auto& r : rows_) {
    if (r.size() != rows_.front().size()) throw SchemaError("correctness rows differ in length");
    for (auto b : r)
      if (b > 1) throw SchemaError("correctness values must be 0 or 1");
  }
}

double CorrectnessMatrix::accuracy(std::size_t model) const {
  if (datapoints() == 0) throw DegenerateInputError("correctness matrix has no datapoints");
  std::uint64_t n = 0;
  for (auto b : rows_[model]) n += b;
  return static_cast<double>(n) / static_cast<double>(datapoints());
}

std::string cell_label(const std::vector<std::string>& model_ids, std::uint32_t mask) {
  if (mask == 0) return "none";
  std::string out;
  for (std::size_t m = 0; m < model_ids.size(); ++m)
    if (mask & (std::uint32_t{1} << m)) {
      if (!out.empty()) out += '+';
      out += model_ids[m];
    }
  return out;
}

OverlapHistogram exclusive_fractions(const CorrectnessMatrix& c) {
  const std::size_t n = c.datapoints();
  if (n == 0) throw DegenerateInputError("correctness matrix has no datapoints");
  const std::size_t k = c.models();
  std::vector<std::uint64_t> counts(std::size_t{1} << k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t mask = 0;
    for (std::size_t m = 0; m < k; ++m)
      if (c.correct(m, i)) mask |= std::uint32_t{1} << m;
    ++counts[mask];
  }
  OverlapHistogram h;
  h.model_ids = c.model_ids();
  h.n_datapoints = n;
  h.observed.resize(counts.size());
  for (std::size_t cell = 0; cell < counts.size(); ++cell)
    h.observed[cell] = static_cast<double>(counts[cell]) / static_cast<double>(n);
  return h;
}

OverlapHistogram expected_independent(const std::vector<std::pair<std::string, double>>& accuracies) {
  if (accuracies.empty()) throw SchemaError("need at least one model accuracy");
  if (accuracies.size() > CorrectnessMatrix::kMaxModels) throw SchemaError("at most 16 models are supported");
  OverlapHistogram h;
  for (const auto& [id, a] : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) throw RangeError("accuracy of '" + id + "' outside [0, 1]");
    h.model_ids.push_back(id);
    h.accuracies.push_back(a);
  }
  const std::size_t k = accuracies.size();
  h.expected.resize(std::size_t{1} << k);
  for (std::size_t cell = 0; cell < h.expected.size(); ++cell) {
    double p = 1.0;
    for (std::size_t m = 0; m < k; ++m) p *= (cell >> m) & 1 ? h.accuracies[m] : 1.0 - h.accuracies[m];
    h.expected[cell] = p;
  }
  return h;
}

OverlapHistogram overlap_report(const CorrectnessMatrix& c) {
  auto h = exclusive_fractions(c);
  std::vector<std::pair<std::string, double>> acc;
  for (std::size_t m = 0; m < c.models(); ++m) acc.emplace_back(c.model_ids()[m], c.accuracy(m));
  const auto e = expected_independent(acc);
  h.expected = e.expected;
  h.accuracies = e.accuracies;
  return h;
}

CorrectnessMatrix parse_correctness(const Json& doc) {
  if (!doc.is_object() || !doc.contains("models") || !doc.contains("correct"))
    throw SchemaError("correctness file needs 'models' and 'correct'");
  if (!doc["models"].is_array() || !doc["correct"].is_array())
    throw SchemaError("'models' and 'correct' must be arrays");
  std::vector<std::string> ids;
  for (const auto& m : doc["models"]) {
    if (!m.is_string()) throw SchemaError("model ids must be strings");
    ids.push_back(m.get<std::string>());
  }
  std::vector<std::vector<std::uint8_t>> rows;
  for (const auto& row : doc["correct"]) {
    if (!row.is_array()) throw SchemaError("each correctness row must be an array");
    std::vector<std::uint8_t> r;
    r.reserve(row.size());
    for (const auto& v : row) {
      if (v.is_boolean()) r.push_back(v.get<bool>() ? 1 : 0);
      else if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1))
        r.push_back(static_cast<std::uint8_t>(v.get<long long>()));
      else throw SchemaError("correctness values must be 0/1 or booleans");
    }
    rows.push_back(std::move(r));
  }
  return CorrectnessMatrix(std::move(ids), std::move(rows));
}

CorrectnessMatrix load_correctness(const std::filesystem::path& path, const std::filesystem::path& sidecar) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingFileError("no such file: " + path.string());
  if (!has_tensor_magic(path)) return parse_correctness(read_json_file(path));

  const Tensor t = read_tensor(path);
  if (t.ndim() != 2 || t.dtype() != DType::u8) throw SchemaError("correctness tensor must be a 2D u8 matrix");
  auto names_path = sidecar.empty() ? std::filesystem::path(path).replace_extension(".json") : sidecar;
  const auto names = read_json_file(names_path);
  if (!names.is_object() || !names.contains("models") || !names["models"].is_array())
    throw SchemaError("sidecar " + names_path.string() + " needs a 'models' array");
  std::vector<std::string> ids;
  for (const auto& m : names["models"]) {
    if (!m.is_string()) throw SchemaError("model ids must be strings");
    ids.push_back(m.get<std::string>());
  }
  const std::size_t k = t.shape()[0];
  const std::size_t n = t.shape()[1];
  std::vector<std::vector<std::uint8_t>> rows(k, std::vector<std::uint8_t>(n));
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t i = 0; i < n; ++i) rows[m][i] = std::to_integer<std::uint8_t>(t.bytes()[m * n + i]);
  return CorrectnessMatrix(std::move(ids), std::move(rows));
}

}  // namespace xferlens

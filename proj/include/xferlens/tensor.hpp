#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xferlens/errors.hpp"

namespace xferlens {

enum class DType : std::uint8_t { u8 = 1, i16 = 2, u16 = 3, f32 = 4, f64 = 5 };

std::size_t dtype_size(DType dtype);
const char* dtype_name(DType dtype);

/// Row-major matrix type used wherever a tensor is viewed as a 2D table.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense n-dimensional array. The payload is kept in its on-disk
/// little-endian byte layout so that write(read(file)) is bit exact.
class Tensor {
 public:
  static constexpr std::size_t kMaxDims = 8;

  Tensor() = default;
  Tensor(DType dtype, std::vector<std::uint64_t> shape);

  template <typename T>
  static Tensor from_values(DType dtype, std::vector<std::uint64_t> shape, std::span<const T> values);

  DType dtype() const { return dtype_; }
  const std::vector<std::uint64_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const;

  std::span<const std::byte> bytes() const { return payload_; }
  std::span<std::byte> bytes() { return payload_; }

  double at(std::size_t flat_index) const;
  void set(std::size_t flat_index, double value);

  /// All elements widened to f64, row-major.
  std::vector<double> to_f64() const;

  /// Views dimension 0 as rows and the remaining dimensions, flattened, as
  /// columns.
  RowMatrix<double> as_matrix() const;

  /// Sub-tensor at index `i` along axis 0.
  Tensor slice(std::size_t i) const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  DType dtype_ = DType::u8;
  std::vector<std::uint64_t> shape_;
  std::vector<std::byte> payload_;
};

struct ReadOptions {
  /// Upper bound on the payload a header may declare.
  std::uint64_t max_payload_bytes = std::uint64_t{8} << 30;
};

Tensor parse_tensor(std::span<const std::byte> file_bytes, const ReadOptions& options = {});
std::vector<std::byte> serialize_tensor(const Tensor& tensor);

Tensor read_tensor(const std::filesystem::path& path, const ReadOptions& options = {});
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

/// True when the file starts with the TNSR magic.
bool has_tensor_magic(const std::filesystem::path& path);

/// Ordered slices of one scan. Slice index is the z position.
struct VolumeStack {
  std::string volume_id;
  std::vector<Tensor> slices;
  double slice_spacing_mm = 1.0;
  std::string source_path;

  std::size_t slice_count() const { return slices.size(); }
};

/// Loads a volume from either a single 3D tensor (split on axis 0) or a
/// directory of 2D tensors in lexicographic filename order.
VolumeStack load_volume(const std::filesystem::path& path, std::string volume_id, double slice_spacing_mm);

template <typename T>
Tensor Tensor::from_values(DType dtype, std::vector<std::uint64_t> shape, std::span<const T> values) {
  Tensor t(dtype, std::move(shape));
  if (values.size() != t.size()) throw ShapeError("value count does not match tensor shape");
  for (std::size_t i = 0; i < values.size(); ++i) t.set(i, static_cast<double>(values[i]));
  return t;
}

}  // namespace xferlens

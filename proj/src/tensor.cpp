#include "xferlens/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace xferlens {
namespace {

constexpr std::array<char, 4> kMagic = {'T', 'N', 'S', 'R'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kFixedHeader = 8;

template <typename U>
U load_le(const std::byte* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  return v;
}

template <typename U>
void store_le(std::byte* p, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) p[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}

bool valid_dtype(std::uint8_t code) { return code >= 1 && code <= 5; }

// Product of dims with overflow detection; returns false on overflow.
bool checked_product(const std::vector<std::uint64_t>& dims, std::uint64_t& out) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) return false;
    n *= d;
  }
  out = n;
  return true;
}

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::u8: return 1;
    case DType::i16: return 2;
    case DType::u16: return 2;
    case DType::f32: return 4;
    case DType::f64: return 8;
  }
  throw FormatError("unknown dtype");
}

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::u8: return "u8";
    case DType::i16: return "i16";
    case DType::u16: return "u16";
    case DType::f32: return "f32";
    case DType::f64: return "f64";
  }
  return "?";
}

Tensor::Tensor(DType dtype, std::vector<std::uint64_t> shape) : dtype_(dtype), shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > kMaxDims) throw ShapeError("tensor rank must be in [1, 8]");
  if (std::ranges::any_of(shape_, [](auto d) { return d == 0; })) throw ShapeError("tensor dims must be >= 1");
  std::uint64_t n = 0;
  if (!checked_product(shape_, n)) throw ShapeError("tensor element count overflows");
  payload_.assign(n * dtype_size(dtype_), std::byte{0});
}

std::size_t Tensor::size() const { return payload_.size() / dtype_size(dtype_); }

double Tensor::at(std::size_t i) const {
  const std::byte* p = payload_.data() + i * dtype_size(dtype_);
  switch (dtype_) {
    case DType::u8: return static_cast<double>(std::to_integer<std::uint8_t>(*p));
    case DType::i16: return static_cast<double>(static_cast<std::int16_t>(load_le<std::uint16_t>(p)));
    case DType::u16: return static_cast<double>(load_le<std::uint16_t>(p));
    case DType::f32: return static_cast<double>(std::bit_cast<float>(load_le<std::uint32_t>(p)));
    case DType::f64: return std::bit_cast<double>(load_le<std::uint64_t>(p));
  }
  return 0.0;
}

void Tensor::set(std::size_t i, double value) {
  std::byte* p = payload_.data() + i * dtype_size(dtype_);
  switch (dtype_) {
    case DType::u8: *p = static_cast<std::byte>(static_cast<std::uint8_t>(value)); break;
    case DType::i16: store_le(p, static_cast<std::uint16_t>(static_cast<std::int16_t>(value))); break;
    case DType::u16: store_le(p, static_cast<std::uint16_t>(value)); break;
    case DType::f32: store_le(p, std::bit_cast<std::uint32_t>(static_cast<float>(value))); break;
    case DType::f64: store_le(p, std::bit_cast<std::uint64_t>(value)); break;
  }
}

std::vector<double> Tensor::to_f64() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

RowMatrix<double> Tensor::as_matrix() const {
  if (shape_.empty()) throw ShapeError("empty tensor");
  const auto rows = static_cast<Eigen::Index>(shape_[0]);
  const auto cols = static_cast<Eigen::Index>(size() / shape_[0]);
  RowMatrix<double> m(rows, cols);
  for (std::size_t i = 0; i < size(); ++i) m.data()[i] = at(i);
  return m;
}

Tensor Tensor::slice(std::size_t i) const {
  if (shape_.size() < 2) throw ShapeError("cannot slice a 1D tensor");
  if (i >= shape_[0]) throw ShapeError("slice index out of range");
  Tensor out(dtype_, std::vector<std::uint64_t>(shape_.begin() + 1, shape_.end()));
  const std::size_t stride = out.payload_.size();
  std::memcpy(out.payload_.data(), payload_.data() + i * stride, stride);
  return out;
}

namespace {

struct Header {
  DType dtype;
  std::vector<std::uint64_t> shape;
  std::size_t length;
  std::uint64_t payload;
};

// Validates everything up to and including the dimension table.
Header parse_header(std::span<const std::byte> file, const ReadOptions& options) {
  if (file.size() < kFixedHeader) throw FormatError("file shorter than TNSR header");
  for (std::size_t i = 0; i < kMagic.size(); ++i)
    if (std::to_integer<char>(file[i]) != kMagic[i]) throw FormatError("bad magic, not a TNSR file");
  const auto version = std::to_integer<std::uint8_t>(file[4]);
  if (version != kVersion) throw FormatError("unsupported TNSR version " + std::to_string(version));
  const auto dtype_code = std::to_integer<std::uint8_t>(file[5]);
  if (!valid_dtype(dtype_code)) throw FormatError("invalid dtype code " + std::to_string(dtype_code));
  const auto ndim = std::to_integer<std::uint8_t>(file[6]);
  if (ndim == 0 || ndim > Tensor::kMaxDims) throw FormatError("ndim must be in [1, 8]");
  if (std::to_integer<std::uint8_t>(file[7]) != 0) throw FormatError("reserved header byte must be zero");

  Header h{static_cast<DType>(dtype_code), std::vector<std::uint64_t>(ndim), kFixedHeader + std::size_t{ndim} * 8, 0};
  if (file.size() < h.length) throw TruncationError("file ends inside the dimension table");
  for (std::size_t d = 0; d < ndim; ++d) {
    h.shape[d] = load_le<std::uint64_t>(file.data() + kFixedHeader + d * 8);
    if (h.shape[d] == 0) throw FormatError("dimension " + std::to_string(d) + " is zero");
  }
  std::uint64_t count = 0;
  if (!checked_product(h.shape, count) || count > options.max_payload_bytes / dtype_size(h.dtype))
    throw FormatError("declared payload exceeds the configured size cap");
  h.payload = count * dtype_size(h.dtype);
  return h;
}

void check_payload_length(const Header& h, std::uint64_t available) {
  if (available != h.payload)
    throw TruncationError("payload is " + std::to_string(available) + " bytes, header requires " +
                          std::to_string(h.payload));
}

}  // namespace

Tensor parse_tensor(std::span<const std::byte> file, const ReadOptions& options) {
  auto h = parse_header(file, options);
  check_payload_length(h, file.size() - h.length);
  Tensor t(h.dtype, std::move(h.shape));
  std::memcpy(t.bytes().data(), file.data() + h.length, h.payload);
  return t;
}

std::vector<std::byte> serialize_tensor(const Tensor& tensor) {
  std::vector<std::byte> out(kFixedHeader + tensor.ndim() * 8 + tensor.bytes().size());
  for (std::size_t i = 0; i < kMagic.size(); ++i) out[i] = static_cast<std::byte>(kMagic[i]);
  out[4] = std::byte{kVersion};
  out[5] = static_cast<std::byte>(tensor.dtype());
  out[6] = static_cast<std::byte>(tensor.ndim());
  out[7] = std::byte{0};
  for (std::size_t d = 0; d < tensor.ndim(); ++d) store_le(out.data() + kFixedHeader + d * 8, tensor.shape()[d]);
  std::ranges::copy(tensor.bytes(), out.begin() + static_cast<std::ptrdiff_t>(kFixedHeader + tensor.ndim() * 8));
  return out;
}

Tensor read_tensor(const std::filesystem::path& path, const ReadOptions& options) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingFileError("no such tensor file: " + path.string());
  const std::uint64_t file_size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::byte> head(std::min<std::uint64_t>(file_size, kFixedHeader + Tensor::kMaxDims * 8));
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (!in) throw IoError("short read on " + path.string());

  // The header is validated against the file size before any payload buffer
  // is allocated.
  auto h = parse_header(head, options);
  check_payload_length(h, file_size - h.length);

  Tensor t(h.dtype, std::move(h.shape));
  in.seekg(static_cast<std::streamoff>(h.length));
  in.read(reinterpret_cast<char*>(t.bytes().data()), static_cast<std::streamsize>(h.payload));
  if (!in) throw IoError("short read on " + path.string());
  return t;
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  const auto bytes = serialize_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on " + path.string());
}

bool has_tensor_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  return in && magic == kMagic;
}

VolumeStack load_volume(const std::filesystem::path& path, std::string volume_id, double slice_spacing_mm) {
  VolumeStack v;
  v.volume_id = std::move(volume_id);
  v.slice_spacing_mm = slice_spacing_mm;
  v.source_path = path.string();
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::ranges::sort(files, [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
    for (const auto& f : files) {
      auto t = read_tensor(f);
      if (t.ndim() != 2) throw ShapeError("volume slice " + f.string() + " is not 2D");
      v.slices.push_back(std::move(t));
    }
  } else {
    const auto t = read_tensor(path);
    if (t.ndim() != 3) throw ShapeError("volume tensor " + path.string() + " is not 3D");
    for (std::size_t i = 0; i < t.shape()[0]; ++i) v.slices.push_back(t.slice(i));
  }
  if (v.slices.empty()) throw SchemaError("volume " + v.volume_id + " has no slices");
  for (const auto& s : v.slices)
    if (s.shape() != v.slices.front().shape() || s.dtype() != v.slices.front().dtype())
      throw ShapeError("volume " + v.volume_id + " mixes slice shapes or dtypes");
  return v;
}

}  // namespace xferlens

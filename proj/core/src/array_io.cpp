#include "gazenet/array_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "gazenet/error.hpp"

namespace gazenet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "ARR1 payloads are written in host order; big-endian hosts are unsupported");

constexpr std::array<char, 4> kMagic{'A', 'R', 'R', '1'};

std::mutex& observer_mutex() {
  static std::mutex m;
  return m;
}
ReadObserver& observer_slot() {
  static ReadObserver observer;
  return observer;
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::kFloat32;
  } else {
    static_assert(std::is_same_v<T, std::uint8_t>);
    return DType::kUInt8;
  }
}

std::string dtype_name(DType d) {
  switch (d) {
    case DType::kFloat32: return "float32";
    case DType::kUInt8: return "uint8";
  }
  return "dtype(" + std::to_string(static_cast<int>(d)) + ")";
}

template <typename T>
void write_impl(const std::filesystem::path& path, const Array<T>& array) {
  if (array.rank() > kMaxArrayRank) {
    throw FormatError("rank " + std::to_string(array.rank()) + " exceeds 5 for " + path.string());
  }
  if (Array<T>::count(array.shape) != array.data.size()) {
    throw ShapeError("array payload of " + std::to_string(array.data.size()) +
                     " elements does not match shape " + shape_to_string(array.shape));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  const auto dtype = static_cast<std::uint8_t>(dtype_of<T>());
  const auto rank = static_cast<std::uint8_t>(array.rank());
  out.put(static_cast<char>(dtype));
  out.put(static_cast<char>(rank));
  for (std::size_t extent : array.shape) {
    const std::uint64_t e = extent;
    out.write(reinterpret_cast<const char*>(&e), sizeof e);
  }
  out.write(reinterpret_cast<const char*>(array.data.data()),
            static_cast<std::streamsize>(array.data.size() * sizeof(T)));
  if (!out) throw LoadError("write failed: " + path.string());
}

ArrayHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("bad magic in " + path.string());
  const int dtype = in.get();
  const int rank = in.get();
  if (!in) throw FormatError("truncated header in " + path.string());
  if (dtype != static_cast<int>(DType::kFloat32) && dtype != static_cast<int>(DType::kUInt8)) {
    throw FormatError("unknown dtype code " + std::to_string(dtype) + " in " + path.string());
  }
  if (rank > static_cast<int>(kMaxArrayRank)) {
    throw FormatError("rank " + std::to_string(rank) + " exceeds 5 in " + path.string());
  }
  ArrayHeader header{static_cast<DType>(dtype), {}};
  for (int i = 0; i < rank; ++i) {
    std::uint64_t e = 0;
    in.read(reinterpret_cast<char*>(&e), sizeof e);
    if (!in) throw FormatError("truncated shape in " + path.string());
    header.shape.push_back(static_cast<std::size_t>(e));
  }
  return header;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  notify_read(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

template <typename T>
Array<T> read_impl(const std::filesystem::path& path, std::span<const std::size_t> expected) {
  auto in = open_for_read(path);
  ArrayHeader header = parse_header(in, path);
  if (header.dtype != dtype_of<T>()) {
    throw TypeError(path.string() + " holds " + dtype_name(header.dtype) + ", expected " +
                    dtype_name(dtype_of<T>()));
  }
  if (!expected.empty() &&
      !std::equal(expected.begin(), expected.end(), header.shape.begin(), header.shape.end())) {
    throw TypeError(path.string() + " has shape " + shape_to_string(header.shape) +
                    ", expected " + shape_to_string(expected));
  }
  Array<T> array(header.shape);
  const auto bytes = static_cast<std::streamsize>(array.data.size() * sizeof(T));
  in.read(reinterpret_cast<char*>(array.data.data()), bytes);
  if (in.gcount() != bytes) throw FormatError("truncated payload in " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after payload in " + path.string());
  }
  return array;
}

}  // namespace

void write_array(const std::filesystem::path& path, const FloatArray& array) {
  write_impl(path, array);
}
void write_array(const std::filesystem::path& path, const ByteArray& array) {
  write_impl(path, array);
}

FloatArray read_float_array(const std::filesystem::path& path,
                            std::span<const std::size_t> expected_shape) {
  return read_impl<float>(path, expected_shape);
}
ByteArray read_byte_array(const std::filesystem::path& path,
                          std::span<const std::size_t> expected_shape) {
  return read_impl<std::uint8_t>(path, expected_shape);
}

ArrayHeader read_array_header(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_header(in, path);
}

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

void set_read_observer(ReadObserver observer) {
  std::lock_guard lock(observer_mutex());
  observer_slot() = std::move(observer);
}

void notify_read(const std::filesystem::path& path) {
  std::lock_guard lock(observer_mutex());
  if (observer_slot()) observer_slot()(path);
}

}  // namespace gazenet

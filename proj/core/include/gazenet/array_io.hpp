#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace gazenet {

// Element type codes used by the ARR1 container.
enum class DType : std::uint8_t { kFloat32 = 1, kUInt8 = 2 };

inline constexpr std::size_t kMaxArrayRank = 5;

// Dense row-major array. The container format is:
//   "ARR1" | dtype u8 | rank u8 | rank x u64 LE extents | payload LE row-major
template <typename T>
struct Array {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Array() = default;
  explicit Array(std::vector<std::size_t> s) : shape(std::move(s)), data(count(shape)) {}
  Array(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {}

  static std::size_t count(std::span<const std::size_t> s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }
  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  friend bool operator==(const Array&, const Array&) = default;
};

using FloatArray = Array<float>;
using ByteArray = Array<std::uint8_t>;

struct ArrayHeader {
  DType dtype;
  std::vector<std::size_t> shape;
};

void write_array(const std::filesystem::path& path, const FloatArray& array);
void write_array(const std::filesystem::path& path, const ByteArray& array);

// Typed reads throw TypeError when the stored dtype differs, and when
// `expected_shape` is non-empty and does not match.
FloatArray read_float_array(const std::filesystem::path& path,
                            std::span<const std::size_t> expected_shape = {});
ByteArray read_byte_array(const std::filesystem::path& path,
                          std::span<const std::size_t> expected_shape = {});

ArrayHeader read_array_header(const std::filesystem::path& path);

std::string shape_to_string(std::span<const std::size_t> shape);

// Read auditing: every file opened for reading by the library is reported to
// the installed observer. Used to prove that a code path never touches a
// modality's files.
using ReadObserver = std::function<void(const std::filesystem::path&)>;
void set_read_observer(ReadObserver observer);
void notify_read(const std::filesystem::path& path);

}  // namespace gazenet

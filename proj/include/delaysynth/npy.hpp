#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace delaysynth {

/// A dense little-endian float64 array in C order.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

/// Complete NPY v1.0 preamble (magic, version, header length, header dict
/// padded with spaces to a 64-byte boundary and terminated by '\n').
std::string npy_preamble(std::span<const std::size_t> shape);

/// Reads a '<f8' C-order NPY file (format version 1.0 or 2.0).
NpyArray read_npy(const std::filesystem::path& path);

void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape, std::span<const double> data);

/// Streams a large array to disk. Data goes to a temporary file next to the
/// target, which replaces the target only when finish() has seen exactly the
/// declared number of elements.
class NpyWriter {
 public:
  NpyWriter(std::filesystem::path path, std::vector<std::size_t> shape);
  NpyWriter(const NpyWriter&) = delete;
  NpyWriter& operator=(const NpyWriter&) = delete;
  ~NpyWriter();

  void write(std::span<const double> values);
  void finish();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  std::uint64_t expected_ = 0;
  std::uint64_t written_ = 0;
  bool finished_ = false;
};

/// Writes `content` to a temporary sibling, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace delaysynth

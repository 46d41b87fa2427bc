#include "delaysynth/npy.hpp"

#include <bit>
#include <cstring>
#include <numeric>
#include <regex>

#include "delaysynth/core.hpp"

namespace delaysynth {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

std::uint64_t element_count(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::uint64_t{1}, std::multiplies<>());
}

std::string shape_tuple(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  if (shape.size() == 1) s += ",";
  return s + ")";
}

void encode_le(std::span<const double> values, std::string& buffer) {
  buffer.resize(values.size() * 8);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(buffer.data(), values.data(), buffer.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(values[i]);
      for (int b = 0; b < 8; ++b) buffer[i * 8 + b] = static_cast<char>(bits >> (8 * b));
    }
  }
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

}  // namespace

std::string npy_preamble(std::span<const std::size_t> shape) {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape_tuple(shape) + ", }";
  const std::size_t unpadded = kMagicLen + 2 + 2 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  if (dict.size() > 0xFFFF) throw ArgumentError("npy: header too long for format 1.0");
  std::string out(kMagic, kMagicLen);
  out += '\x01';
  out += '\x00';
  out += static_cast<char>(dict.size() & 0xFF);
  out += static_cast<char>((dict.size() >> 8) & 0xFF);
  return out + dict;
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[kMagicLen];
  unsigned char version[2];
  if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw FormatError(path.string() + ": not an NPY file");
  if (!in.read(reinterpret_cast<char*>(version), 2)) throw FormatError(path.string() + ": truncated NPY header");
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw FormatError(path.string() + ": truncated NPY header");
    header_len = b[0] | (b[1] << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(path.string() + ": truncated NPY header");
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  } else {
    throw FormatError(path.string() + ": unsupported NPY version " + std::to_string(version[0]));
  }
  std::string header(header_len, '\0');
  if (!in.read(header.data(), header_len)) throw FormatError(path.string() + ": truncated NPY header");

  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(header, m, descr_re)) throw FormatError(path.string() + ": NPY header lacks descr");
  if (m[1] != "<f8") throw FormatError(path.string() + ": unsupported dtype " + m[1].str() + " (expected <f8)");
  if (!std::regex_search(header, m, order_re)) throw FormatError(path.string() + ": NPY header lacks fortran_order");
  if (m[1] == "True") throw FormatError(path.string() + ": Fortran-ordered arrays are not supported");
  if (!std::regex_search(header, m, shape_re)) throw FormatError(path.string() + ": NPY header lacks shape");

  NpyArray array;
  const std::string dims = m[1];
  static const std::regex dim_re(R"(\d+)");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), dim_re); it != std::sregex_iterator(); ++it)
    array.shape.push_back(std::stoull(it->str()));

  const auto count = element_count(array.shape);
  std::string raw(count * 8, '\0');
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw FormatError(path.string() + ": NPY payload shorter than declared shape");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(path.string() + ": NPY payload longer than declared shape");
  array.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
    array.data[i] = std::bit_cast<double>(bits);
  }
  return array;
}

void write_npy(const std::filesystem::path& path, std::span<const std::size_t> shape, std::span<const double> data) {
  NpyWriter writer(path, {shape.begin(), shape.end()});
  writer.write(data);
  writer.finish();
}

NpyWriter::NpyWriter(std::filesystem::path path, std::vector<std::size_t> shape)
    : path_(std::move(path)), tmp_(temp_sibling(path_)), expected_(element_count(shape)) {
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open " + tmp_.string() + " for writing");
  const auto preamble = npy_preamble(shape);
  out_.write(preamble.data(), static_cast<std::streamsize>(preamble.size()));
}

NpyWriter::~NpyWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void NpyWriter::write(std::span<const double> values) {
  if (written_ + values.size() > expected_) throw ArgumentError("npy: more values than the declared shape holds");
  std::string buffer;
  encode_le(values, buffer);
  out_.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (!out_) throw IoError("failed writing " + tmp_.string());
  written_ += values.size();
}

void NpyWriter::finish() {
  if (written_ != expected_) throw ArgumentError("npy: fewer values than the declared shape holds");
  out_.close();
  if (!out_) throw IoError("failed writing " + tmp_.string());
  std::filesystem::rename(tmp_, path_);
  finished_ = true;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace delaysynth

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "delaysynth/config.hpp"
#include "delaysynth/core.hpp"
#include "delaysynth/csv.hpp"
#include "delaysynth/npy.hpp"
#include "doctest.h"

using namespace delaysynth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "delaysynth_test_formats";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

// Minimal NPY reader that shares no code with the library: fixed byte
// offsets, literal header text, little-endian decode by hand.
struct RefNpy {
  std::string header;
  std::vector<double> values;
};

RefNpy reference_read(const std::string& bytes) {
  RefNpy out;
  REQUIRE(bytes.size() >= 10);
  REQUIRE(bytes.compare(0, 6, "\x93NUMPY") == 0);
  REQUIRE(bytes[6] == 1);
  REQUIRE(bytes[7] == 0);
  const std::size_t hlen = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
  out.header = bytes.substr(10, hlen);
  const std::size_t start = 10 + hlen;
  REQUIRE((bytes.size() - start) % 8 == 0);
  for (std::size_t i = start; i < bytes.size(); i += 8) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(bytes[i + b]);
    out.values.push_back(std::bit_cast<double>(bits));
  }
  return out;
}

}  // namespace

TEST_CASE("NPY preamble layout") {
  const std::size_t shape[] = {2, 3, 10, 24};
  const auto pre = npy_preamble(shape);
  CHECK(pre.size() % 64 == 0);
  CHECK(pre.substr(0, 8) == std::string("\x93NUMPY\x01\x00", 8));
  CHECK(pre.back() == '\n');
  CHECK(pre.find("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3, 10, 24), }") == 10);
  const std::size_t one[] = {5};
  CHECK(npy_preamble(one).find("'shape': (5,)") != std::string::npos);
}

TEST_CASE("NPY round trip through an independent reader") {
  const auto path = scratch("round.npy");
  std::vector<double> data;
  for (int i = 0; i < 2 * 3 * 24; ++i) data.push_back(std::ldexp(i * 0.37 - 11.0, i % 9 - 4));
  data[5] = -0.0;
  data[6] = std::numeric_limits<double>::denorm_min();
  data[7] = 1e308;
  const std::size_t shape[] = {2, 3, 24};
  write_npy(path, shape, data);

  const auto ref = reference_read(slurp(path));
  CHECK(ref.header.find("'shape': (2, 3, 24)") != std::string::npos);
  CHECK(ref.header.find("'descr': '<f8'") != std::string::npos);
  REQUIRE(ref.values.size() == data.size());
  CHECK(std::memcmp(ref.values.data(), data.data(), data.size() * 8) == 0);

  const auto back = read_npy(path);
  CHECK(back.shape == std::vector<std::size_t>{2, 3, 24});
  CHECK(std::memcmp(back.data.data(), data.data(), data.size() * 8) == 0);
}

TEST_CASE("NPY reader accepts a version 2.0 header written by hand") {
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }";
  while ((12 + dict.size() + 1) % 64) dict += ' ';
  dict += '\n';
  std::string bytes("\x93NUMPY\x02\x00", 8);
  const auto len = static_cast<std::uint32_t>(dict.size());
  for (int b = 0; b < 4; ++b) bytes += static_cast<char>((len >> (8 * b)) & 0xFF);
  bytes += dict;
  for (double v : {1.5, -2.0, 3.25}) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes += static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  const auto path = scratch("v2.npy");
  spit(path, bytes);
  const auto arr = read_npy(path);
  CHECK(arr.shape == std::vector<std::size_t>{3});
  CHECK(arr.data == std::vector<double>{1.5, -2.0, 3.25});
}

TEST_CASE("NPY reader rejects unsupported or inconsistent files") {
  const std::size_t shape[] = {2};
  const auto good = npy_preamble(shape) + std::string(16, '\0');
  auto with_header = [&](const std::string& from, const std::string& to) {
    std::string b = good;
    b.replace(b.find(from), from.size(), to);
    return b;
  };
  const auto path = scratch("bad.npy");

  spit(path, with_header("'<f8'", "'<f4'"));
  CHECK_THROWS_AS(read_npy(path), FormatError);
  spit(path, with_header("False", "True "));
  CHECK_THROWS_AS(read_npy(path), FormatError);
  spit(path, good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_npy(path), FormatError);
  spit(path, good + "x");
  CHECK_THROWS_AS(read_npy(path), FormatError);
  spit(path, "not numpy at all");
  CHECK_THROWS_AS(read_npy(path), FormatError);
  CHECK_THROWS_AS(read_npy(scratch("missing.npy")), IoError);
}

TEST_CASE("NpyWriter only publishes complete arrays") {
  const auto path = scratch("partial.npy");
  fs::remove(path);
  {
    NpyWriter w(path, {2, 24});
    w.write(std::vector<double>(24, 1.0));
    CHECK_THROWS_AS(w.finish(), ArgumentError);
  }
  CHECK_FALSE(fs::exists(path));
  CHECK_FALSE(fs::exists(path.string() + ".tmp"));
  NpyWriter w(path, {1, 2});
  CHECK_THROWS_AS(w.write(std::vector<double>(3, 0.0)), ArgumentError);
}

TEST_CASE("CSV reader handles quoting, CRLF and embedded newlines") {
  std::istringstream in("a,b,c\r\n\"x,1\",\"say \"\"hi\"\"\",\r\n\"multi\nline\",2,3\nlast,,");
  CsvReader r(in);
  std::vector<std::string> f;
  REQUIRE(r.next(f));
  CHECK(f == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(r.next(f));
  CHECK(r.line() == 2);
  CHECK(f == std::vector<std::string>{"x,1", "say \"hi\"", ""});
  REQUIRE(r.next(f));
  CHECK(f == std::vector<std::string>{"multi\nline", "2", "3"});
  REQUIRE(r.next(f));
  CHECK(r.line() == 5);
  CHECK(f == std::vector<std::string>{"last", "", ""});
  CHECK_FALSE(r.next(f));

  std::istringstream bad("\"open");
  CsvReader rb(bad);
  CHECK_THROWS_AS(rb.next(f), FormatError);
}

TEST_CASE("CSV writing escapes only when needed and doubles round-trip") {
  std::ostringstream out;
  write_csv_row(out, {"plain", "with,comma", "q\"uote"});
  CHECK(out.str() == "plain,\"with,comma\",\"q\"\"uote\"\n");
  for (double v : {0.1, -1e-300, 123456789.125, 1.0 / 3.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("config parser: sections, scalars, arrays") {
  const auto j = parse_config(R"(# run
region = "US"
master_seed = 18_446_744_073_709_551_615
airports = ["ATL", "ORD",]   # trailing comma
threshold = 0.25
neg = -3
flag = true

[sampler]
variant = "RandomDraw"
[refinery.discriminator]
epochs = 7
)");
  CHECK(j["region"] == "US");
  CHECK(j["master_seed"].get<std::uint64_t>() == 18446744073709551615ULL);
  CHECK(j["airports"] == nlohmann::json::array({"ATL", "ORD"}));
  CHECK(j["threshold"].get<double>() == 0.25);
  CHECK(j["neg"].get<int>() == -3);
  CHECK(j["flag"] == true);
  CHECK(j["sampler"]["variant"] == "RandomDraw");
  CHECK(j["refinery"]["discriminator"]["epochs"] == 7);
}

TEST_CASE("config parser reports the failing line") {
  auto message = [](const char* text) {
    try {
      parse_config(text);
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("a = 1\na = 2\n").find("line 2") != std::string::npos);
  CHECK(message("a = \"open\n").find("line 1") != std::string::npos);
  CHECK(message("\n\n[sec\n").find("line 3") != std::string::npos);
  CHECK(message("a = 1 2\n").find("trailing") != std::string::npos);
  CHECK(message("a = [1, 2\n").find("line 1") != std::string::npos);
  CHECK(message("x = nope\n").find("cannot parse") != std::string::npos);
}

TEST_CASE("median and matrix helpers") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  Matrix m(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::size_t rows[] = {2, 0};
  CHECK(take_rows(m, rows) == Matrix(2, 2, std::vector<double>{5, 6, 1, 2}));
  CHECK(vstack(m, m).rows() == 6);
  CHECK(m.column(1) == std::vector<double>{2, 4, 6});
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}), ArgumentError);
  CHECK_THROWS_AS(require_hour_columns(m, "test"), ArgumentError);
}

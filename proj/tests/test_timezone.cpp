#include <filesystem>
#include <fstream>

#include "delaysynth/core.hpp"
#include "delaysynth/timezone.hpp"
#include "doctest.h"

using namespace delaysynth;
using std::chrono::seconds;
using std::chrono::sys_seconds;

namespace {

sys_seconds at(long long t) { return sys_seconds{seconds{t}}; }

void be32(std::string& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out += static_cast<char>((v >> s) & 0xFF);
}

// A version-1 TZif file with one transition at t=1000 from +1h to +2h.
std::string tiny_tzif() {
  std::string b = "TZif";
  b += std::string(16, '\0');
  for (std::uint32_t v : {0u, 0u, 0u, 1u, 2u, 4u}) be32(b, v);  // isut isstd leap time type chars
  be32(b, 1000);
  b += '\x01';
  be32(b, 3600);
  b += '\0';
  b += '\0';
  be32(b, 7200);
  b += '\x01';
  b += '\0';
  b += std::string("AB\0\0", 4);
  return b;
}

}  // namespace

TEST_CASE("fixed offsets and UTC aliases") {
  CHECK(TimeZone::load("UTC").offset_at(at(0)) == seconds{0});
  CHECK(TimeZone::load("Z").offset_at(at(0)) == seconds{0});
  CHECK(TimeZone::load("+05:30").offset_at(at(123)) == seconds{19800});
  CHECK(TimeZone::load("-04:00").offset_at(at(123)) == seconds{-14400});
  CHECK(TimeZone::fixed(seconds{-14400}).name() == "-04:00");
  CHECK(TimeZone::load("+02:00").to_local(at(0)) == at(7200));
}

TEST_CASE("system zones agree with an independent zoneinfo reader") {
  // Offsets computed with Python's zoneinfo for the same instants.
  struct Row {
    const char* zone;
    long long t;
    long long offset;
  };
  const Row rows[] = {
      {"Europe/London", 1547553600, 0},          {"Europe/London", 1563192000, 3600},
      {"Europe/London", 1553993999, 0},          {"Europe/London", 1553994000, 3600},
      {"America/New_York", 1547553600, -18000},  {"America/New_York", 1563192000, -14400},
      {"America/New_York", 1572760799, -14400},  {"America/New_York", 1572760800, -18000},
      {"Australia/Sydney", 1547553600, 39600},   {"Australia/Sydney", 1563192000, 36000},
  };
  if (!std::filesystem::exists("/usr/share/zoneinfo/Europe/London") && !std::getenv("TZDIR")) {
    MESSAGE("no zoneinfo database; skipped");
    return;
  }
  for (const auto& r : rows) {
    CAPTURE(r.zone);
    CAPTURE(r.t);
    CHECK(TimeZone::load(r.zone).offset_at(at(r.t)) == seconds{r.offset});
  }
}

TEST_CASE("hand-built TZif file") {
  const auto root = std::filesystem::temp_directory_path() / "delaysynth_tz";
  std::filesystem::create_directories(root / "Test");
  {
    std::ofstream out(root / "Test" / "Tiny", std::ios::binary);
    out << tiny_tzif();
  }
  const auto tz = TimeZone::load("Test/Tiny", root);
  CHECK(tz.offset_at(at(-5000)) == seconds{3600});
  CHECK(tz.offset_at(at(999)) == seconds{3600});
  CHECK(tz.offset_at(at(1000)) == seconds{7200});
  CHECK(tz.offset_at(at(4'000'000'000LL)) == seconds{7200});

  {
    std::ofstream out(root / "Test" / "Broken", std::ios::binary);
    out << tiny_tzif().substr(0, 50);
  }
  CHECK_THROWS_AS(TimeZone::load("Test/Broken", root), FormatError);
  CHECK_THROWS_AS(TimeZone::load("Test/Missing", root), ArgumentError);
  CHECK_THROWS_AS(TimeZone::load("../etc/passwd", root), ArgumentError);
}

#include "delaysynth/timezone.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iterator>

#include "delaysynth/core.hpp"

namespace delaysynth {
namespace {

std::uint32_t be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

std::int64_t be64(const unsigned char* p) {
  return static_cast<std::int64_t>((static_cast<std::uint64_t>(be32(p)) << 32) | be32(p + 4));
}

// "+HH:MM", "-HHMM", "+HH". Returns false if `text` is not an offset.
bool parse_fixed_offset(std::string_view text, std::int32_t& seconds) {
  if (text.size() < 3 || (text[0] != '+' && text[0] != '-')) return false;
  std::string digits;
  for (char c : text.substr(1)) {
    if (c == ':') continue;
    if (c < '0' || c > '9') return false;
    digits += c;
  }
  if (digits.size() != 2 && digits.size() != 4) return false;
  const int hh = std::stoi(digits.substr(0, 2));
  const int mm = digits.size() == 4 ? std::stoi(digits.substr(2, 2)) : 0;
  if (hh > 23 || mm > 59) return false;
  seconds = (hh * 3600 + mm * 60) * (text[0] == '-' ? -1 : 1);
  return true;
}

}  // namespace

TimeZone TimeZone::utc() {
  TimeZone tz;
  tz.name_ = "UTC";
  return tz;
}

TimeZone TimeZone::fixed(std::chrono::seconds offset) {
  if (std::abs(offset.count()) > 26 * 3600) throw ArgumentError("time zone offset out of range");
  TimeZone tz;
  tz.initial_offset_ = static_cast<std::int32_t>(offset.count());
  const auto total = std::abs(offset.count());
  char buf[48];
  std::snprintf(buf, sizeof buf, "%c%02lld:%02lld", offset.count() < 0 ? '-' : '+',
                static_cast<long long>(total / 3600), static_cast<long long>((total % 3600) / 60));
  tz.name_ = buf;
  return tz;
}

TimeZone TimeZone::load(std::string_view name) {
  const char* env = std::getenv("TZDIR");
  return load(name, env && *env ? std::filesystem::path(env) : std::filesystem::path("/usr/share/zoneinfo"));
}

TimeZone TimeZone::load(std::string_view name, const std::filesystem::path& zoneinfo_root) {
  if (name.empty() || name == "UTC" || name == "Z" || name == "GMT") return utc();
  std::int32_t fixed_seconds = 0;
  if (parse_fixed_offset(name, fixed_seconds)) return fixed(std::chrono::seconds{fixed_seconds});
  if (name.find("..") != std::string_view::npos) throw ArgumentError("invalid time zone name '" + std::string(name) + "'");

  const auto path = zoneinfo_root / std::string(name);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("unknown time zone '" + std::string(name) + "' (no " + path.string() + ")");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto bad = [&] { return FormatError("malformed TZif file " + path.string()); };

  struct Header {
    std::uint32_t isut, isstd, leap, time, type, chars;
  };
  auto read_header = [&](std::size_t pos) {
    if (pos + 44 > bytes.size() || std::string_view(reinterpret_cast<const char*>(&bytes[pos]), 4) != "TZif") throw bad();
    const unsigned char* p = &bytes[pos + 20];
    return Header{be32(p), be32(p + 4), be32(p + 8), be32(p + 12), be32(p + 16), be32(p + 20)};
  };
  auto block_size = [](const Header& h, std::size_t time_size) {
    return h.time * time_size + h.time + h.type * 6 + h.chars + h.leap * (time_size + 4) + h.isstd + h.isut;
  };

  Header h = read_header(0);
  const char version = static_cast<char>(bytes[4]);
  std::size_t pos = 44;
  std::size_t time_size = 4;
  if (version >= '2') {
    pos += block_size(h, 4);
    h = read_header(pos);
    pos += 44;
    time_size = 8;
  }
  if (pos + block_size(h, time_size) > bytes.size() || h.type == 0) throw bad();

  TimeZone tz;
  tz.name_ = std::string(name);
  const unsigned char* times = &bytes[pos];
  const unsigned char* indices = times + h.time * time_size;
  const unsigned char* types = indices + h.time;
  auto type_offset = [&](std::size_t t) {
    if (t >= h.type) throw bad();
    return static_cast<std::int32_t>(be32(types + t * 6));
  };
  tz.initial_offset_ = type_offset(0);
  for (std::uint32_t i = 0; i < h.time; ++i) {
    tz.transitions_.push_back(time_size == 8 ? be64(times + i * 8) : static_cast<std::int32_t>(be32(times + i * 4)));
    tz.offsets_.push_back(type_offset(indices[i]));
  }
  if (!std::is_sorted(tz.transitions_.begin(), tz.transitions_.end())) throw bad();
  return tz;
}

std::chrono::seconds TimeZone::offset_at(std::chrono::sys_seconds instant) const {
  const auto t = instant.time_since_epoch().count();
  const auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t);
  if (it == transitions_.begin()) return std::chrono::seconds{initial_offset_};
  return std::chrono::seconds{offsets_[static_cast<std::size_t>(it - transitions_.begin() - 1)]};
}

}  // namespace delaysynth

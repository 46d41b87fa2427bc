#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace delaysynth {

/// UTC-to-local offset lookup for one zone.
///
/// Zones come from TZif files (RFC 8536) under the zoneinfo directory, or
/// from fixed offsets ("UTC", "+05:30", "-04:00"). For instants after a
/// file's last explicit transition the last offset stays in effect; system
/// zoneinfo files list transitions through 2037.
class TimeZone {
 public:
  static TimeZone utc();
  static TimeZone fixed(std::chrono::seconds offset);

  /// Resolves an IANA name or fixed offset. The zoneinfo root defaults to
  /// $TZDIR, else /usr/share/zoneinfo.
  static TimeZone load(std::string_view name);
  static TimeZone load(std::string_view name, const std::filesystem::path& zoneinfo_root);

  std::chrono::seconds offset_at(std::chrono::sys_seconds instant) const;

  /// Local wall-clock time for a UTC instant, as a sys_seconds value.
  std::chrono::sys_seconds to_local(std::chrono::sys_seconds instant) const {
    return instant + offset_at(instant);
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<std::int64_t> transitions_;  // UTC seconds, ascending
  std::vector<std::int32_t> offsets_;      // offset in effect from transitions_[i]
  std::int32_t initial_offset_ = 0;
};

}  // namespace delaysynth

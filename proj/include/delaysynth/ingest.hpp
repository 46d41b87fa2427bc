#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "delaysynth/delay_matrix.hpp"
#include "delaysynth/timezone.hpp"

namespace delaysynth {

using Timestamp = std::chrono::sys_seconds;

/// One scheduled flight. All timestamps are UTC.
struct FlightRecord {
  std::string flight_id;
  std::string origin;
  std::string destination;
  Timestamp sched_dep;
  std::optional<Timestamp> act_dep;
  Timestamp sched_arr;
  std::optional<Timestamp> act_arr;

  std::optional<std::chrono::seconds> delay(DelayKind kind) const;

  friend bool operator==(const FlightRecord&, const FlightRecord&) = default;
};

/// Maps record fields to CSV header names.
///
/// `timestamp_format` is a std::get_time pattern, or "epoch" for integer
/// seconds since 1970-01-01 UTC.
struct CsvSchema {
  std::string flight_id = "flight_id";
  std::string origin = "origin";
  std::string destination = "destination";
  std::string sched_dep = "sched_dep";
  std::string act_dep = "act_dep";
  std::string sched_arr = "sched_arr";
  std::string act_arr = "act_arr";
  std::string timestamp_format = "%Y-%m-%d %H:%M:%S";
};

struct RejectedRow {
  std::string source;
  std::size_t line = 0;
  std::string reason;
};

struct ParsedFlights {
  std::vector<FlightRecord> records;
  std::vector<RejectedRow> rejects;
};

/// Throws FormatError when `text` does not match `format` in full.
Timestamp parse_timestamp(std::string_view text, std::string_view format);

/// Rows that fail to parse land in `rejects`; a missing header column is
/// fatal (FormatError), as is an unreadable file (IoError).
ParsedFlights parse_flight_csv(const std::filesystem::path& path, const CsvSchema& schema);
ParsedFlights parse_flight_csv(std::istream& in, const CsvSchema& schema, const std::string& source = "<stream>");

/// Airports ranked by number of operations of `kind` (descending, ties by
/// code), truncated to `n`.
std::vector<std::string> busiest_airports(const std::vector<FlightRecord>& records, DelayKind kind, std::size_t n);

/// Every date from `first` to `last` inclusive.
std::vector<Date> date_range(Date first, Date last);

struct HourlyAggregate {
  DelayMatrix matrix;
  std::vector<std::size_t> counts;  // operations per cell, row-major
};

/// Averages (actual - scheduled) over the operations of `kind` at `airport`
/// whose scheduled time falls in each local day-hour. Departures belong to
/// their origin, arrivals to their destination. Operations without an actual
/// time, or outside `calendar`, are ignored.
HourlyAggregate aggregate_hourly_counted(const std::vector<FlightRecord>& records, const std::string& airport,
                                         DelayKind kind, DelayUnit unit, const std::vector<Date>& calendar,
                                         const TimeZone& tz = TimeZone::utc());

DelayMatrix aggregate_hourly(const std::vector<FlightRecord>& records, const std::string& airport, DelayKind kind,
                             DelayUnit unit, const std::vector<Date>& calendar,
                             const TimeZone& tz = TimeZone::utc());

/// Sidecar path: "X.npy" -> "X.meta.json".
std::filesystem::path meta_path(const std::filesystem::path& npy_path);

/// Values go to `path` as a days x 24 NPY array; metadata and mask to the
/// ".meta.json" sidecar. Both are written atomically.
void save_matrix(const DelayMatrix& m, const std::filesystem::path& path);

/// With `region` set, a unit other than the region's is a FormatError.
DelayMatrix load_matrix(const std::filesystem::path& path, const std::optional<Region>& region = std::nullopt);

}  // namespace delaysynth

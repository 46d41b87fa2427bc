#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "delaysynth/core.hpp"

namespace delaysynth {

using Date = std::chrono::year_month_day;

std::string format_date(Date d);
/// Parses "YYYY-MM-DD".
Date parse_date(std::string_view text);

/// Hourly average delays of one airport: one row per day, one column per hour.
///
/// Cells without any operation are unobserved: their value is 0 and they are
/// excluded from every statistic computed downstream.
struct DelayMatrix {
  std::string airport;
  DelayKind kind = DelayKind::Arrival;
  DelayUnit unit = DelayUnit::Minutes;
  Matrix values;
  std::vector<bool> mask;  // row-major, days * 24, true where observed
  std::vector<Date> day_labels;

  std::size_t days() const { return values.rows(); }
  bool observed(std::size_t day, std::size_t hour) const { return mask[day * kHours + hour]; }

  /// Throws FormatError when shape, mask, fill value or labels are inconsistent.
  void validate() const;

  /// Fully observed matrix with consecutive day labels starting at `first_day`.
  static DelayMatrix dense(std::string airport, DelayKind kind, DelayUnit unit, Matrix values,
                           Date first_day = Date{std::chrono::year{2015}, std::chrono::January, std::chrono::day{1}});
};

enum class RegionName { EU, US };

struct Region {
  RegionName name = RegionName::EU;
  DelayUnit unit = DelayUnit::Seconds;
  std::size_t expected_days = 610;

  static Region eu() { return {RegionName::EU, DelayUnit::Seconds, 610}; }
  static Region us() { return {RegionName::US, DelayUnit::Minutes, 1825}; }
  static Region parse(std::string_view text);
};

std::string_view to_string(RegionName name);

}  // namespace delaysynth

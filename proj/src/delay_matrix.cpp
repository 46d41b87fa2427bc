#include "delaysynth/delay_matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace delaysynth {

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return FormatError("bad date '" + std::string(text) + "', expected YYYY-MM-DD"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto parse = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto r = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (r.ec != std::errc{} || r.ptr != text.data() + pos + len) throw bad();
  };
  parse(0, 4, y);
  parse(5, 2, m);
  parse(8, 2, d);
  const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) throw bad();
  return date;
}

void DelayMatrix::validate() const {
  if (airport.empty()) throw FormatError("delay matrix: empty airport code");
  if (values.cols() != kHours)
    throw FormatError("delay matrix " + airport + ": expected 24 columns, got " + std::to_string(values.cols()));
  if (mask.size() != values.rows() * kHours) throw FormatError("delay matrix " + airport + ": mask shape mismatch");
  if (day_labels.size() != values.rows()) throw FormatError("delay matrix " + airport + ": day label count mismatch");
  for (std::size_t i = 1; i < day_labels.size(); ++i)
    if (!(day_labels[i - 1] < day_labels[i]))
      throw FormatError("delay matrix " + airport + ": day labels must be strictly increasing");
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t h = 0; h < kHours; ++h) {
      const double v = values(r, h);
      if (!std::isfinite(v)) throw FormatError("delay matrix " + airport + ": non-finite value");
      if (!observed(r, h) && v != 0.0)
        throw FormatError("delay matrix " + airport + ": unobserved cell with non-zero value");
    }
  }
}

DelayMatrix DelayMatrix::dense(std::string airport, DelayKind kind, DelayUnit unit, Matrix values, Date first_day) {
  require_hour_columns(values, "DelayMatrix::dense");
  DelayMatrix m;
  m.airport = std::move(airport);
  m.kind = kind;
  m.unit = unit;
  m.mask.assign(values.rows() * kHours, true);
  const std::chrono::sys_days start{first_day};
  for (std::size_t i = 0; i < values.rows(); ++i)
    m.day_labels.emplace_back(start + std::chrono::days{static_cast<long>(i)});
  m.values = std::move(values);
  return m;
}

Region Region::parse(std::string_view text) {
  if (text == "EU" || text == "eu") return eu();
  if (text == "US" || text == "us") return us();
  throw ArgumentError("unknown region '" + std::string(text) + "' (expected EU or US)");
}

std::string_view to_string(RegionName name) { return name == RegionName::EU ? "EU" : "US"; }

}  // namespace delaysynth

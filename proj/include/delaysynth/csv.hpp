#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace delaysynth {

/// RFC 4180 reader: comma separated, double-quoted fields may contain
/// commas, doubled quotes and line breaks; CRLF and LF both end a record.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record into `fields`; false at end of input.
  bool next(std::vector<std::string>& fields);

  /// 1-based line number where the last record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field only when it needs it.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal representation ('.' separator).
std::string format_double(double v);

}  // namespace delaysynth

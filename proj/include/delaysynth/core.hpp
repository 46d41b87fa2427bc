#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace delaysynth {

inline constexpr std::size_t kHours = 24;

/// Violated precondition on a public entry point.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DelayKind { Departure, Arrival };
enum class DelayUnit { Seconds, Minutes };

std::string_view to_string(DelayKind kind);
std::string_view to_string(DelayUnit unit);
/// Short tag used in file names ("Dep" / "Arr").
std::string_view short_tag(DelayKind kind);
DelayKind parse_kind(std::string_view text);
DelayUnit parse_unit(std::string_view text);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;

  void append_row(std::span<const double> values);

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Selects the given rows, in order.
Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows);

/// Stacks rows of `bottom` under `top`; column counts must agree.
Matrix vstack(const Matrix& top, const Matrix& bottom);

void require_hour_columns(const Matrix& m, std::string_view what);

double median(std::vector<double> values);

}  // namespace delaysynth

#include "delaysynth/core.hpp"

#include <algorithm>

namespace delaysynth {

std::string_view to_string(DelayKind kind) {
  return kind == DelayKind::Arrival ? "Arrival" : "Departure";
}

std::string_view to_string(DelayUnit unit) {
  return unit == DelayUnit::Minutes ? "Minutes" : "Seconds";
}

std::string_view short_tag(DelayKind kind) { return kind == DelayKind::Arrival ? "Arr" : "Dep"; }

DelayKind parse_kind(std::string_view text) {
  if (text == "Arrival" || text == "arrival" || text == "Arr" || text == "arr") return DelayKind::Arrival;
  if (text == "Departure" || text == "departure" || text == "Dep" || text == "dep")
    return DelayKind::Departure;
  throw ArgumentError("unknown delay kind '" + std::string(text) + "'");
}

DelayUnit parse_unit(std::string_view text) {
  if (text == "Minutes" || text == "minutes") return DelayUnit::Minutes;
  if (text == "Seconds" || text == "seconds") return DelayUnit::Seconds;
  throw ArgumentError("unknown delay unit '" + std::string(text) + "'");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ArgumentError("matrix data size does not match shape");
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw ArgumentError("row length does not match matrix columns");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) throw ArgumentError("vstack: column counts differ");
  std::vector<double> data(top.data().begin(), top.data().end());
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

void require_hour_columns(const Matrix& m, std::string_view what) {
  if (m.cols() != kHours)
    throw ArgumentError(std::string(what) + ": expected 24 columns, got " + std::to_string(m.cols()));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("median of empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace delaysynth

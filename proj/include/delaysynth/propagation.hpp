#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "delaysynth/core.hpp"
#include "delaysynth/rng.hpp"
#include "json.hpp"

namespace delaysynth {

enum class ConcatMode { PerDayPooled, FullConcat };
enum class SeriesKind { Real, Synthetic, Shuffled };

std::string_view to_string(ConcatMode mode);
std::string_view to_string(SeriesKind kind);
ConcatMode parse_concat_mode(std::string_view text);

struct GcConfig {
  int max_lag = 3;
  ConcatMode concat_mode = ConcatMode::PerDayPooled;
  std::uint64_t rng_seed = 0;
  /// Pick the lag in [1, max_bic_lag] minimising the unrestricted model's BIC
  /// instead of using max_lag.
  bool select_lag_bic = false;
  int max_bic_lag = 6;
  /// Test first differences (taken within each day when PerDayPooled).
  bool first_difference = false;
  /// Z-score every hour-of-day column (over days) before testing, removing
  /// the shared daily profile and its hour-dependent spread.
  bool standardize_hours = false;

  void validate() const;
};

struct GcResult {
  std::string airport_a;  // candidate cause
  std::string airport_b;  // effect
  double f_stat = 0.0;
  double p_value = 1.0;
  std::size_t n_obs = 0;
  int lag = 0;
  SeriesKind series_kind = SeriesKind::Real;
  bool degenerate = false;
};

/// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_upper_tail(double f, double d1, double d2);

/// Tests whether the past of `x` helps predict `y` beyond y's own past.
/// Rows of x and y are days; with PerDayPooled, lagged rows never straddle
/// midnight. A rank-deficient design yields p = 1 with `degenerate` set.
/// The reported p-value is at least DBL_MIN.
GcResult gc_test(const Matrix& x, const Matrix& y, const GcConfig& cfg);

/// One result per ordered pair (a -> b, a != b), sorted by a then b.
std::vector<GcResult> gc_matrix(const std::map<std::string, Matrix>& matrices, const GcConfig& cfg,
                                SeriesKind kind = SeriesKind::Real, int threads = 1);

/// Uniform random permutation of all cells.
Matrix shuffle_surrogate(const Matrix& m, Rng& rng);

/// Counts of log10(p) per series kind over fixed bins
/// [lo, lo + width), ..., [-width, 0]. Values below `lo` go to the first bin.
struct LogPHistogram {
  std::vector<double> edges;
  std::map<SeriesKind, std::vector<std::size_t>> counts;
};

LogPHistogram log10p_histogram(const std::vector<GcResult>& results, double lo = -20.0, double width = 0.5);

void write_gc_csv(std::ostream& out, const std::vector<GcResult>& results);
nlohmann::json to_json(const LogPHistogram& hist);

}  // namespace delaysynth

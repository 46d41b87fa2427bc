#include "delaysynth/propagation.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "delaysynth/csv.hpp"
#include "delaysynth/parallel.hpp"

namespace delaysynth {
namespace {

using Segments = std::vector<std::vector<double>>;

Matrix standardized_hours(const Matrix& m) {
  Matrix out = m;
  const auto n = static_cast<double>(m.rows());
  for (std::size_t h = 0; h < m.cols(); ++h) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, h);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) ss += (m(r, h) - mean) * (m(r, h) - mean);
    const double sd = std::sqrt(ss / n);
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, h) = sd > 0.0 ? (m(r, h) - mean) / sd : 0.0;
  }
  return out;
}

Segments segments_of(const Matrix& input, const GcConfig& cfg) {
  const Matrix m = cfg.standardize_hours ? standardized_hours(input) : input;
  Segments out;
  if (cfg.concat_mode == ConcatMode::PerDayPooled) {
    for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  } else {
    out.emplace_back(m.data().begin(), m.data().end());
  }
  if (cfg.first_difference) {
    for (auto& s : out) {
      for (std::size_t i = s.size(); i-- > 1;) s[i] -= s[i - 1];
      if (!s.empty()) s.erase(s.begin());
    }
  }
  return out;
}

struct Design {
  Eigen::MatrixXd restricted;
  Eigen::MatrixXd unrestricted;
  Eigen::VectorXd target;
};

// Rows start at offset `first` within each segment so that designs for
// different lags can share a sample.
Design build_design(const Segments& xs, const Segments& ys, int lag, int first) {
  std::size_t n = 0;
  for (const auto& s : ys)
    if (s.size() > static_cast<std::size_t>(first)) n += s.size() - first;
  Design d;
  d.restricted.resize(n, 1 + lag);
  d.unrestricted.resize(n, 1 + 2 * lag);
  d.target.resize(n);
  Eigen::Index row = 0;
  for (std::size_t seg = 0; seg < ys.size(); ++seg) {
    const auto& x = xs[seg];
    const auto& y = ys[seg];
    for (std::size_t t = first; t < y.size(); ++t, ++row) {
      d.target(row) = y[t];
      d.restricted(row, 0) = d.unrestricted(row, 0) = 1.0;
      for (int l = 1; l <= lag; ++l) {
        d.restricted(row, l) = d.unrestricted(row, l) = y[t - l];
        d.unrestricted(row, lag + l) = x[t - l];
      }
    }
  }
  return d;
}

struct Fit {
  double rss = 0.0;
  bool full_rank = false;
};

Fit least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  Fit fit;
  fit.full_rank = qr.rank() == a.cols();
  if (fit.full_rank) fit.rss = (b - a * qr.solve(b)).squaredNorm();
  return fit;
}

int bic_lag(const Segments& xs, const Segments& ys, int max_lag) {
  int best = 1;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int lag = 1; lag <= max_lag; ++lag) {
    const Design d = build_design(xs, ys, lag, max_lag);
    const auto n = static_cast<double>(d.target.size());
    if (n <= d.unrestricted.cols()) break;
    const Fit fit = least_squares(d.unrestricted, d.target);
    if (!fit.full_rank || !(fit.rss > 0.0)) continue;
    const double bic = n * std::log(fit.rss / n) + static_cast<double>(d.unrestricted.cols()) * std::log(n);
    if (bic < best_bic) {
      best_bic = bic;
      best = lag;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(ConcatMode mode) {
  return mode == ConcatMode::PerDayPooled ? "PerDayPooled" : "FullConcat";
}

std::string_view to_string(SeriesKind kind) {
  switch (kind) {
    case SeriesKind::Real: return "Real";
    case SeriesKind::Synthetic: return "Synthetic";
    case SeriesKind::Shuffled: return "Shuffled";
  }
  return "?";
}

ConcatMode parse_concat_mode(std::string_view text) {
  if (text == "PerDayPooled" || text == "per-day") return ConcatMode::PerDayPooled;
  if (text == "FullConcat" || text == "full") return ConcatMode::FullConcat;
  throw ArgumentError("unknown concat mode '" + std::string(text) + "'");
}

void GcConfig::validate() const {
  const int top = select_lag_bic ? max_bic_lag : max_lag;
  if (top < 1) throw ArgumentError("gc: lag must be at least 1");
  const int hours_per_day = first_difference ? static_cast<int>(kHours) - 1 : static_cast<int>(kHours);
  if (concat_mode == ConcatMode::PerDayPooled && top >= hours_per_day)
    throw ArgumentError("gc: lag must be below the number of hours per day when pooling days");
}

double f_upper_tail(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ArgumentError("f_upper_tail: degrees of freedom must be positive");
  if (std::isnan(f)) throw ArgumentError("f_upper_tail: NaN statistic");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2)
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

GcResult gc_test(const Matrix& x, const Matrix& y, const GcConfig& cfg) {
  cfg.validate();
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw ArgumentError("gc_test: series are not aligned");
  if (x.empty()) throw ArgumentError("gc_test: empty series");

  const Segments xs = segments_of(x, cfg);
  const Segments ys = segments_of(y, cfg);
  GcResult res;
  res.lag = cfg.select_lag_bic ? bic_lag(xs, ys, cfg.max_bic_lag) : cfg.max_lag;

  const Design d = build_design(xs, ys, res.lag, res.lag);
  res.n_obs = static_cast<std::size_t>(d.target.size());
  if (res.n_obs <= static_cast<std::size_t>(2 * res.lag + 1))
    throw ArgumentError("gc_test: " + std::to_string(res.n_obs) + " observations are too few for lag " +
                        std::to_string(res.lag));

  const Fit r = least_squares(d.restricted, d.target);
  const Fit u = least_squares(d.unrestricted, d.target);
  const double l = res.lag;
  const double dof = static_cast<double>(res.n_obs) - 2.0 * l - 1.0;
  if (!r.full_rank || !u.full_rank || !(r.rss > 0.0)) {
    res.degenerate = true;
    return res;
  }
  const double gain = std::max(r.rss - u.rss, 0.0);
  res.f_stat = u.rss > 0.0 ? (gain / l) / (u.rss / dof) : std::numeric_limits<double>::infinity();
  res.p_value = std::clamp(f_upper_tail(res.f_stat, l, dof), DBL_MIN, 1.0);
  return res;
}

std::vector<GcResult> gc_matrix(const std::map<std::string, Matrix>& matrices, const GcConfig& cfg,
                                SeriesKind kind, int threads) {
  if (matrices.size() < 2) throw ArgumentError("gc_matrix: need at least two airports");
  std::vector<std::pair<const std::pair<const std::string, Matrix>*, const std::pair<const std::string, Matrix>*>>
      pairs;
  for (const auto& a : matrices)
    for (const auto& b : matrices)
      if (a.first != b.first) pairs.emplace_back(&a, &b);

  std::vector<GcResult> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto& [a, b] = pairs[i];
    GcResult r = gc_test(a->second, b->second, cfg);
    r.airport_a = a->first;
    r.airport_b = b->first;
    r.series_kind = kind;
    out[i] = std::move(r);
  });
  return out;
}

Matrix shuffle_surrogate(const Matrix& m, Rng& rng) {
  Matrix out = m;
  auto data = out.data();
  shuffle(data.begin(), data.end(), rng);
  return out;
}

LogPHistogram log10p_histogram(const std::vector<GcResult>& results, double lo, double width) {
  if (!(lo < 0.0) || !(width > 0.0)) throw ArgumentError("log10p_histogram: need lo < 0 and width > 0");
  const auto n_bins = static_cast<std::size_t>(std::ceil(-lo / width));
  LogPHistogram hist;
  for (std::size_t i = 0; i <= n_bins; ++i) hist.edges.push_back(std::min(lo + static_cast<double>(i) * width, 0.0));
  for (const auto& r : results) {
    auto& counts = hist.counts[r.series_kind];
    counts.resize(n_bins, 0);
    const double v = std::log10(r.p_value);
    const auto bin = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
    ++counts[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(n_bins) - 1))];
  }
  return hist;
}

void write_gc_csv(std::ostream& out, const std::vector<GcResult>& results) {
  write_csv_row(out, {"airport_a", "airport_b", "direction", "lag", "n_obs", "f", "p", "log10p", "kind", "degenerate"});
  for (const auto& r : results)
    write_csv_row(out, {r.airport_a, r.airport_b, r.airport_a + "->" + r.airport_b, std::to_string(r.lag),
                        std::to_string(r.n_obs), format_double(r.f_stat), format_double(r.p_value),
                        format_double(std::log10(r.p_value)), std::string(to_string(r.series_kind)),
                        r.degenerate ? "1" : "0"});
}

nlohmann::json to_json(const LogPHistogram& hist) {
  nlohmann::json j;
  j["edges"] = hist.edges;
  j["counts"] = nlohmann::json::object();
  for (const auto& [kind, counts] : hist.counts) j["counts"][std::string(to_string(kind))] = counts;
  return j;
}

}  // namespace delaysynth

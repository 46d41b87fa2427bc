#include "delaysynth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "delaysynth/csv.hpp"
#include "delaysynth/parallel.hpp"
#include "delaysynth/rng.hpp"

namespace delaysynth {
namespace {

// Rows centred and scaled to unit norm; constant rows become all-zero.
Matrix unit_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0)) continue;
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t c = 0; c < row.size(); ++c) out(r, c) = (row[c] - mean) * inv;
  }
  return out;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson: length mismatch");
  if (x.empty()) throw ArgumentError("pearson: empty input");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationReport correlation_score(const Matrix& real, const Matrix& synthetic) {
  if (real.rows() == 0 || synthetic.rows() == 0) throw ArgumentError("correlation_score: empty input");
  require_hour_columns(real, "correlation_score");
  require_hour_columns(synthetic, "correlation_score");
  const Matrix ur = unit_rows(real);
  const Matrix us = unit_rows(synthetic);
  CorrelationReport report;
  report.per_synthetic_max.resize(synthetic.rows());
  for (std::size_t s = 0; s < synthetic.rows(); ++s) {
    const auto srow = us.row(s);
    double best = -1.0;
    for (std::size_t r = 0; r < real.rows(); ++r) {
      const auto rrow = ur.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < kHours; ++c) dot += srow[c] * rrow[c];
      best = std::max(best, dot);
    }
    report.per_synthetic_max[s] = std::clamp(best, -1.0, 1.0);
  }
  const auto summary = summarize_scores(report.per_synthetic_max);
  report.median = summary.median;
  report.min = summary.min;
  report.max = summary.max;
  return report;
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw ArgumentError("jacobi_eigen: matrix must be square");
  Matrix a = symmetric;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double threshold = tolerance * std::sqrt(total);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (p != q) s += a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  SymmetricEigen out;
  while (off_norm() > threshold && out.sweeps < max_sweeps) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p, q) (Rutishauser's stable form).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = a(order[i], order[i]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
  }
  return out;
}

ProjectionResult pca_project(const Matrix& real, const Matrix& synthetic) {
  require_hour_columns(real, "pca_project");
  require_hour_columns(synthetic, "pca_project");
  const Matrix all = vstack(real, synthetic);
  const std::size_t n = all.rows();
  if (n < 3) throw ArgumentError("pca_project: need at least 3 rows in total");

  ProjectionResult out;
  out.is_real.assign(real.rows(), true);
  out.is_real.resize(n, false);
  out.coordinates = Matrix(n, 2);

  std::vector<double> mean(kHours, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < kHours; ++c) mean[c] += all(r, c);
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix centred(n, kHours);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < kHours; ++c) centred(r, c) = all(r, c) - mean[c];

  Matrix cov(kHours, kHours);
  for (std::size_t i = 0; i < kHours; ++i) {
    for (std::size_t j = i; j < kHours; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += centred(r, i) * centred(r, j);
      cov(i, j) = cov(j, i) = s / static_cast<double>(n - 1);
    }
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < kHours; ++i) trace += cov(i, i);
  if (!(trace > 0.0)) {
    out.degenerate = true;
    return out;
  }

  const auto eig = jacobi_eigen(cov);
  for (std::size_t k = 0; k < 2; ++k) {
    std::size_t largest = 0;
    for (std::size_t c = 1; c < kHours; ++c)
      if (std::abs(eig.vectors(c, k)) > std::abs(eig.vectors(largest, k))) largest = c;
    const double sign = eig.vectors(largest, k) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < kHours; ++c) s += centred(r, c) * eig.vectors(c, k);
      out.coordinates(r, k) = sign * s;
    }
    out.explained_variance[k] = std::clamp(std::max(eig.values[k], 0.0) / trace, 0.0, 1.0);
  }
  return out;
}

CrossClassReport cross_classification(const std::map<std::string, Matrix>& real,
                                      const std::map<std::string, Matrix>& synthetic,
                                      const DiscriminatorConfig& cfg, int n_repeats, int threads) {
  if (real.size() < 2) throw ArgumentError("cross_classification: need at least two airports");
  for (const auto& [airport, m] : real)
    if (!synthetic.contains(airport)) throw ArgumentError("cross_classification: no synthetic data for " + airport);
  for (const auto& [airport, m] : synthetic)
    if (!real.contains(airport)) throw ArgumentError("cross_classification: no real data for " + airport);

  CrossClassReport report;
  for (auto a = real.begin(); a != real.end(); ++a)
    for (auto b = std::next(a); b != real.end(); ++b) report.pairs.push_back({a->first, b->first, 0.0, 0.0});

  parallel_for(report.pairs.size(), threads, [&](std::size_t i) {
    auto& pair = report.pairs[i];
    DiscriminatorConfig pair_cfg = cfg;
    pair_cfg.rng_seed = derive_seed(cfg.rng_seed, {i});
    pair.accuracy_real =
        holdout_accuracy(real.at(pair.airport_a), real.at(pair.airport_b), pair_cfg, n_repeats).median;
    pair.accuracy_synth =
        holdout_accuracy(synthetic.at(pair.airport_a), synthetic.at(pair.airport_b), pair_cfg, n_repeats).median;
  });
  return report;
}

void write_correlation_csv(std::ostream& out, const CorrelationReport& report) {
  write_csv_row(out, {"synthetic_row", "max_correlation"});
  for (std::size_t i = 0; i < report.per_synthetic_max.size(); ++i)
    write_csv_row(out, {std::to_string(i), format_double(report.per_synthetic_max[i])});
}

void write_projection_csv(std::ostream& out, const ProjectionResult& projection) {
  write_csv_row(out, {"x", "y", "label"});
  for (std::size_t r = 0; r < projection.coordinates.rows(); ++r)
    write_csv_row(out, {format_double(projection.coordinates(r, 0)), format_double(projection.coordinates(r, 1)),
                        projection.is_real[r] ? "real" : "synthetic"});
}

void write_cross_class_csv(std::ostream& out, const CrossClassReport& report) {
  write_csv_row(out, {"airport_a", "airport_b", "accuracy_real", "accuracy_synth"});
  for (const auto& p : report.pairs)
    write_csv_row(out, {p.airport_a, p.airport_b, format_double(p.accuracy_real), format_double(p.accuracy_synth)});
}

nlohmann::json to_json(const CorrelationReport& report) {
  return {{"median", report.median}, {"min", report.min}, {"max", report.max},
          {"count", report.per_synthetic_max.size()}};
}

nlohmann::json to_json(const ScoreDistribution& scores) {
  return {{"median", scores.median}, {"min", scores.min}, {"max", scores.max}, {"scores", scores.scores}};
}

}  // namespace delaysynth

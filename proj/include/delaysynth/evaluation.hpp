#pragma once

#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "delaysynth/core.hpp"
#include "delaysynth/discriminator.hpp"
#include "json.hpp"

namespace delaysynth {

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationReport {
  std::vector<double> per_synthetic_max;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// For every synthetic row, the largest Pearson correlation against any real
/// row. A value of 1 flags a copy of a real day.
CorrelationReport correlation_score(const Matrix& real, const Matrix& synthetic);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are sorted in decreasing order; column i of `vectors` belongs
/// to values[i].
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
  int sweeps = 0;
};

/// Sweeps until the off-diagonal Frobenius norm falls below
/// `tolerance` times the Frobenius norm of the input.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-12, int max_sweeps = 100);

struct ProjectionResult {
  Matrix coordinates;         // (n_real + n_synth) x 2, real rows first
  std::vector<bool> is_real;  // per row
  std::array<double, 2> explained_variance{0.0, 0.0};
  bool degenerate = false;    // all rows identical: coordinates are zero
};

/// Projects the concatenated rows onto the two leading principal axes of
/// their joint covariance. Each axis is signed so that its largest-magnitude
/// loading is positive.
ProjectionResult pca_project(const Matrix& real, const Matrix& synthetic);

struct CrossClassPair {
  std::string airport_a;
  std::string airport_b;
  double accuracy_real = 0.0;
  double accuracy_synth = 0.0;
};

struct CrossClassReport {
  std::vector<CrossClassPair> pairs;
};

/// For each unordered airport pair, the held-out accuracy of a classifier
/// telling the two airports apart, once on real and once on synthetic data
/// (median over `n_repeats` random half splits). Real and synthetic runs of a
/// pair share their seeds.
CrossClassReport cross_classification(const std::map<std::string, Matrix>& real,
                                      const std::map<std::string, Matrix>& synthetic,
                                      const DiscriminatorConfig& cfg, int n_repeats = 1, int threads = 1);

void write_correlation_csv(std::ostream& out, const CorrelationReport& report);
void write_projection_csv(std::ostream& out, const ProjectionResult& projection);
void write_cross_class_csv(std::ostream& out, const CrossClassReport& report);

nlohmann::json to_json(const CorrelationReport& report);
nlohmann::json to_json(const ScoreDistribution& scores);

}  // namespace delaysynth

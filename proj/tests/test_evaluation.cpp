#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "delaysynth/evaluation.hpp"
#include "delaysynth/refinery.hpp"
#include "delaysynth/rng.hpp"
#include "delaysynth/toy.hpp"
#include "doctest.h"
#include "support/stats.hpp"

using namespace delaysynth;

namespace {

Matrix gaussian_rows(std::size_t n, std::size_t cols, double shift, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, cols);
  for (auto& x : m.data()) x = shift + rng.normal();
  return m;
}

}  // namespace

TEST_CASE("pearson properties") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(24), y(24), neg(24);
    for (std::size_t i = 0; i < 24; ++i) {
      x[i] = rng.normal() * (1 + t);
      y[i] = rng.normal();
      neg[i] = -x[i];
    }
    CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(pearson(x, y)) <= 1.0 + 1e-12);
    CHECK(pearson(x, y) == doctest::Approx(teststats::pearson(x, y)).epsilon(1e-10));
  }
  const std::vector<double> flat(24, 3.0), ramp = [] {
    std::vector<double> r(24);
    for (std::size_t i = 0; i < 24; ++i) r[i] = double(i);
    return r;
  }();
  CHECK(pearson(flat, ramp) == 0.0);
  CHECK(pearson(flat, flat) == 0.0);
}

TEST_CASE("correlation score") {
  const auto real = gaussian_rows(30, kHours, 0.0, 2);
  const auto copy = correlation_score(real, real);
  REQUIRE(copy.per_synthetic_max.size() == 30);
  for (double v : copy.per_synthetic_max) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  Matrix one = take_rows(real, std::vector<std::size_t>{4});
  Matrix negated = one;
  for (auto& x : negated.data()) x = -x;
  CHECK(correlation_score(one, negated).max == doctest::Approx(-1.0).epsilon(1e-12));

  // Brute force against the reference Pearson, plus invariance to real row order.
  const auto synth = gaussian_rows(12, kHours, 0.0, 3);
  const auto rep = correlation_score(real, synth);
  for (std::size_t s = 0; s < synth.rows(); ++s) {
    double best = -2.0;
    for (std::size_t r = 0; r < real.rows(); ++r) {
      const std::vector<double> a(real.row(r).begin(), real.row(r).end());
      const std::vector<double> b(synth.row(s).begin(), synth.row(s).end());
      best = std::max(best, teststats::pearson(a, b));
    }
    CHECK(rep.per_synthetic_max[s] == doctest::Approx(best).epsilon(1e-10));
  }
  std::vector<std::size_t> rev(real.rows());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
  CHECK(correlation_score(take_rows(real, rev), synth).per_synthetic_max == rep.per_synthetic_max);
  CHECK(rep.median == doctest::Approx(teststats::median(rep.per_synthetic_max)));

  Matrix with_flat = synth;
  for (auto& x : with_flat.row(0)) x = 7.0;
  CHECK(correlation_score(real, with_flat).per_synthetic_max[0] == 0.0);
  CHECK_THROWS_AS(correlation_score(Matrix(0, kHours), synth), ArgumentError);
}

TEST_CASE("jacobi eigen-decomposition agrees with a reference solver") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t n = 4 + 5 * seed;
    const auto a = gaussian_rows(n, n, 0.0, 10 + seed);
    Matrix sym(n, n);
    Eigen::MatrixXd ref(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        sym(i, j) = a(i, j) + a(j, i);
        ref(i, j) = sym(i, j);
      }
    const auto mine = jacobi_eigen(sym);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ref);
    const auto& ev = solver.eigenvalues();  // ascending
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(ev(i)));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(mine.values[i] == doctest::Approx(ev(n - 1 - i)).scale(scale).epsilon(1e-10));
      // Column i is a unit eigenvector: ||A v - lambda v|| small.
      double resid = 0.0, norm = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double av = 0.0;
        for (std::size_t c = 0; c < n; ++c) av += sym(r, c) * mine.vectors(c, i);
        resid += std::pow(av - mine.values[i] * mine.vectors(r, i), 2);
        norm += mine.vectors(r, i) * mine.vectors(r, i);
      }
      CHECK(std::sqrt(resid) <= 1e-9 * scale);
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(mine.sweeps < 100);
  }
  const auto zero = jacobi_eigen(Matrix(3, 3, 0.0));
  CHECK(zero.values == std::vector<double>{0, 0, 0});
}

TEST_CASE("pca: rank one line") {
  Matrix real(30, kHours), synth(20, kHours);
  std::array<double, kHours> dir{};
  for (std::size_t h = 0; h < kHours; ++h) dir[h] = std::sin(0.3 * h) + 0.1;
  Rng rng(4);
  for (Matrix* m : {&real, &synth})
    for (std::size_t r = 0; r < m->rows(); ++r) {
      const double t = rng.normal() * 5.0;
      for (std::size_t h = 0; h < kHours; ++h) (*m)(r, h) = 2.0 + t * dir[h];
    }
  const auto p = pca_project(real, synth);
  CHECK_FALSE(p.degenerate);
  CHECK(p.explained_variance[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(p.explained_variance[1]) <= 1e-9);
  REQUIRE(p.coordinates.rows() == 50);
  for (std::size_t r = 0; r < 50; ++r) CHECK(std::abs(p.coordinates(r, 1)) <= 1e-9);
  CHECK(std::count(p.is_real.begin(), p.is_real.end(), true) == 30);
  CHECK(p.is_real.front());
  CHECK_FALSE(p.is_real.back());
}

TEST_CASE("pca: isotropic cloud") {
  const auto p = pca_project(gaussian_rows(2500, kHours, 0.0, 5), gaussian_rows(2500, kHours, 0.0, 6));
  CHECK(std::abs(p.explained_variance[0] - 1.0 / 24) <= 0.02);
  CHECK(std::abs(p.explained_variance[1] - 1.0 / 24) <= 0.02);
}

TEST_CASE("pca: exchangeable clouds and permutation invariance") {
  Matrix base = gaussian_rows(800, kHours, 0.0, 7);
  for (std::size_t r = 0; r < base.rows(); ++r)
    for (std::size_t h = 0; h < kHours; ++h) base(r, h) *= 1.0 + 0.2 * h;
  std::vector<std::size_t> first(400), second(400);
  for (std::size_t i = 0; i < 400; ++i) {
    first[i] = i;
    second[i] = 400 + i;
  }
  const auto real = take_rows(base, first);
  const auto synth = take_rows(base, second);
  const auto p = pca_project(real, synth);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    std::vector<double> a, b;
    for (std::size_t r = 0; r < p.coordinates.rows(); ++r) (p.is_real[r] ? a : b).push_back(p.coordinates(r, axis));
    auto var = [](const std::vector<double>& v) {
      const double m = teststats::mean(v);
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return s / double(v.size() - 1);
    };
    const double se = std::sqrt(var(a) / double(a.size()) + var(b) / double(b.size()));
    CHECK(std::abs(teststats::mean(a) - teststats::mean(b)) <= 3.0 * se);
  }

  // Swapping rows within each part and swapping the parts moves coordinates with their rows.
  std::vector<std::size_t> rev(400);
  for (std::size_t i = 0; i < 400; ++i) rev[i] = 399 - i;
  const auto q = pca_project(take_rows(synth, rev), real);
  for (std::size_t i = 0; i < 400; ++i)
    for (std::size_t axis = 0; axis < 2; ++axis) {
      CHECK(q.coordinates(i, axis) == doctest::Approx(p.coordinates(400 + 399 - i, axis)).epsilon(1e-9).scale(1.0));
      CHECK(q.coordinates(400 + i, axis) == doctest::Approx(p.coordinates(i, axis)).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("pca: degenerate and invalid input") {
  const auto p = pca_project(Matrix(3, kHours, 4.0), Matrix(2, kHours, 4.0));
  CHECK(p.degenerate);
  CHECK(p.explained_variance == std::array<double, 2>{0.0, 0.0});
  for (double x : p.coordinates.data()) CHECK(x == 0.0);
  CHECK_THROWS_AS(pca_project(Matrix(1, kHours), Matrix(1, kHours)), ArgumentError);

  std::ostringstream csv;
  write_projection_csv(csv, p);
  CHECK(csv.str().rfind("x,y,label\n", 0) == 0);
}

TEST_CASE("cross classification: identical and disjoint airports") {
  DiscriminatorConfig cfg;
  cfg.rng_seed = 3;
  const auto a = gaussian_rows(300, kHours, 0.0, 20);
  const std::map<std::string, Matrix> same{{"AAA", a}, {"BBB", a}};
  const auto rep = cross_classification(same, same, cfg, 3);
  REQUIRE(rep.pairs.size() == 1);
  CHECK(rep.pairs[0].airport_a == "AAA");
  CHECK(std::abs(rep.pairs[0].accuracy_real - 0.5) <= 0.05);
  CHECK(std::abs(rep.pairs[0].accuracy_synth - 0.5) <= 0.05);

  const std::map<std::string, Matrix> apart{{"AAA", a}, {"BBB", gaussian_rows(300, kHours, 100.0, 21)}};
  const auto far = cross_classification(apart, apart, cfg, 1);
  CHECK(far.pairs[0].accuracy_real >= 0.95);
  CHECK(far.pairs[0].accuracy_synth >= 0.95);

  const std::map<std::string, Matrix> only_a{{"AAA", a}};
  CHECK_THROWS_AS(cross_classification(apart, only_a, cfg), ArgumentError);
}

TEST_CASE("cross classification: graded separability carries over to synthetic data") {
  toy::ProcessParams params;
  params.days = 300;
  const auto family = toy::shifted_family({0.0, 1.0, 2.5, 6.0}, params, 31);
  std::map<std::string, Matrix> real, synth;
  SamplerConfig s_cfg;
  RefineryConfig r_cfg;
  r_cfg.iterations = 0;
  for (const auto& m : family) {
    real[m.airport] = m.values;
    synth[m.airport] = batch_generate(m, s_cfg, r_cfg, 1, 40)[0].values;
  }
  DiscriminatorConfig cfg;
  cfg.filters = 16;
  cfg.rng_seed = 9;
  const auto rep = cross_classification(real, synth, cfg, 1);
  REQUIRE(rep.pairs.size() == 6);
  std::vector<double> r, s;
  for (const auto& p : rep.pairs) {
    MESSAGE(p.airport_a << "-" << p.airport_b << " real " << p.accuracy_real << " synth " << p.accuracy_synth);
    r.push_back(p.accuracy_real);
    s.push_back(p.accuracy_synth);
  }
  CHECK(teststats::pearson(r, s) >= 0.8);

  std::ostringstream csv;
  write_cross_class_csv(csv, rep);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 7);
}

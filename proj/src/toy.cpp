#include "delaysynth/toy.hpp"

#include <cmath>

#include "delaysynth/rng.hpp"

namespace delaysynth::toy {
namespace {

double profile(const ProcessParams& p, std::size_t hour) {
  const double h = static_cast<double>(hour);
  return p.base + p.peak * std::exp(-std::pow((h - 17.0) / 4.0, 2)) +
         p.morning * std::exp(-std::pow((h - 9.0) / 2.5, 2));
}

Matrix own_process(const ProcessParams& p, Rng& rng) {
  Matrix m(p.days, kHours);
  const double stationary_sd = p.noise_sd / std::sqrt(1.0 - p.ar * p.ar);
  for (std::size_t d = 0; d < p.days; ++d) {
    const double u = p.day_effect_sd * rng.normal();
    double e = stationary_sd * rng.normal();
    for (std::size_t h = 0; h < kHours; ++h) {
      if (h > 0) e = p.ar * e + p.noise_sd * rng.normal();
      const double night = h < 4 ? p.night_sd * rng.normal() : 0.0;
      m(d, h) = p.shift + profile(p, h) + u + e + night;
    }
  }
  return m;
}

std::string airport_name(std::size_t i) { return "TOY" + std::to_string(i + 1); }

}  // namespace

DelayMatrix delay_matrix(const ProcessParams& params, std::uint64_t seed, std::string airport, DelayKind kind) {
  if (params.days == 0) throw ArgumentError("toy process: days must be positive");
  if (!(std::abs(params.ar) < 1.0)) throw ArgumentError("toy process: |ar| must be < 1");
  Rng rng(seed);
  return DelayMatrix::dense(std::move(airport), kind, DelayUnit::Minutes, own_process(params, rng));
}

std::vector<DelayMatrix> coupled_family(std::size_t n_airports, const ProcessParams& params, double coupling,
                                        std::uint64_t seed) {
  if (n_airports < 2) throw ArgumentError("coupled_family: need at least two airports");
  Rng factor_rng(derive_seed(seed, {0}));
  // Factor over 24 + 2 hours so every lag sees a full day.
  constexpr std::size_t max_lag = 2;
  Matrix factor(params.days, kHours + max_lag);
  const double stationary_sd = 1.0 / std::sqrt(1.0 - params.ar * params.ar);
  for (std::size_t d = 0; d < params.days; ++d) {
    double f = stationary_sd * factor_rng.normal();
    for (std::size_t h = 0; h < kHours + max_lag; ++h) {
      if (h > 0) f = params.ar * f + factor_rng.normal();
      factor(d, h) = f;
    }
  }
  std::vector<DelayMatrix> out;
  for (std::size_t i = 0; i < n_airports; ++i) {
    Rng rng(derive_seed(seed, {1, i}));
    Matrix m = own_process(params, rng);
    const std::size_t lag = i % 3;
    for (std::size_t d = 0; d < params.days; ++d)
      for (std::size_t h = 0; h < kHours; ++h) m(d, h) += coupling * factor(d, h + max_lag - lag);
    out.push_back(DelayMatrix::dense(airport_name(i), DelayKind::Arrival, DelayUnit::Minutes, std::move(m)));
  }
  return out;
}

std::vector<DelayMatrix> shifted_family(const std::vector<double>& shifts, const ProcessParams& params,
                                        std::uint64_t seed) {
  std::vector<DelayMatrix> out;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    ProcessParams p = params;
    p.shift = shifts[i];
    out.push_back(delay_matrix(p, derive_seed(seed, {i}), airport_name(i)));
  }
  return out;
}

}  // namespace delaysynth::toy

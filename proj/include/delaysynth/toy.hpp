#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "delaysynth/delay_matrix.hpp"

namespace delaysynth::toy {

/// Synthetic stand-in for a real airport's delay history, in minutes.
///
///   d(day, h) = shift + profile(h) + u(day) + e(day, h) + night(day, h)
///   profile(h) = base + peak * exp(-((h - 17) / 4)^2) + morning * exp(-((h - 9) / 2.5)^2)
///   e(day, h)  = ar * e(day, h - 1) + noise_sd * N(0, 1),  e(day, 0) stationary
///   u(day)     ~ N(0, day_effect_sd^2), night(day, h) ~ N(0, night_sd^2) for h < 4, else 0
struct ProcessParams {
  std::size_t days = 600;
  double base = 5.0;
  double peak = 10.0;
  double morning = 4.0;
  double ar = 0.7;
  double noise_sd = 3.0;
  double day_effect_sd = 2.0;
  double night_sd = 6.0;
  double shift = 0.0;
};

DelayMatrix delay_matrix(const ProcessParams& params, std::uint64_t seed, std::string airport = "TOY1",
                         DelayKind kind = DelayKind::Arrival);

/// Airports driven by one shared AR(1) factor f. Airport i sees f delayed by
/// (i mod 3) hours and scaled by `coupling`, on top of its own process, so
/// airports with a shorter lag Granger-cause those with a longer one.
std::vector<DelayMatrix> coupled_family(std::size_t n_airports, const ProcessParams& params, double coupling,
                                        std::uint64_t seed);

/// Independent airports, airport i shifted by shifts[i] minutes.
std::vector<DelayMatrix> shifted_family(const std::vector<double>& shifts, const ProcessParams& params,
                                        std::uint64_t seed);

}  // namespace delaysynth::toy

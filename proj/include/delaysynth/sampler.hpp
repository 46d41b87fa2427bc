#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "delaysynth/core.hpp"
#include "delaysynth/delay_matrix.hpp"
#include "delaysynth/rng.hpp"

namespace delaysynth {

enum class SamplerVariant {
  Full,        // decile-conditioned chain after the night hours
  RandomDraw,  // every hour resampled unconditionally
};

std::string_view to_string(SamplerVariant variant);
SamplerVariant parse_variant(std::string_view text);

struct SamplerConfig {
  int night_hours = 4;
  int n_quantiles = 10;
  std::uint64_t rng_seed = 0;
  SamplerVariant variant = SamplerVariant::Full;

  void validate() const;
  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct DelayVector {
  std::array<double, kHours> values{};
  std::string airport;
  DelayKind kind = DelayKind::Arrival;
};

/// k + 1 empirical quantile edges at probabilities i/k, linear interpolation
/// between order statistics. edges.front() is the minimum, edges.back() the
/// maximum.
std::vector<double> quantile_edges(std::span<const double> samples, int k);

/// Index i with edges[i] <= x < edges[i + 1]. Values below the first edge map
/// to bin 0, values at or above the last edge to the last bin, and a value
/// equal to an interior edge goes to the higher bin.
std::size_t locate_bin(std::span<const double> edges, double x);

/// Precomputed per-hour statistics of a real matrix. Building it once lets
/// many vectors be drawn without re-sorting the columns.
class ConditionalSampler {
 public:
  ConditionalSampler(const DelayMatrix& real, const SamplerConfig& cfg);

  const SamplerConfig& config() const { return cfg_; }

  /// Draws one synthetic day from `rng`.
  DelayVector generate(Rng& rng) const;

  /// Observed (masked-true) values at `hour`, in day order.
  std::span<const double> observed(std::size_t hour) const { return observed_[hour]; }

 private:
  struct Transition {
    std::vector<double> prev_edges;                // quantiles of the observed hour-1 values
    std::vector<std::vector<double>> next_values;  // per bin: hour values of days whose hour-1 fell in it
    std::vector<std::vector<double>> next_edges;   // per bin: quantiles of next_values (empty if none)
  };

  double draw_unconditional(std::size_t hour, Rng& rng) const;
  double draw_conditional(std::size_t hour, double previous, Rng& rng) const;
  double draw_from_edges(std::span<const double> edges, Rng& rng) const;

  SamplerConfig cfg_;
  std::string airport_;
  DelayKind kind_;
  std::array<std::vector<double>, kHours> observed_;
  std::array<Transition, kHours> transitions_;
};

/// One synthetic day drawn from `real` with the given stream.
DelayVector generate_vector(const DelayMatrix& real, const SamplerConfig& cfg, Rng& rng);

}  // namespace delaysynth

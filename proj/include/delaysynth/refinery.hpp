#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delaysynth/delay_matrix.hpp"
#include "delaysynth/discriminator.hpp"
#include "delaysynth/sampler.hpp"
#include "json.hpp"

namespace delaysynth {

struct RefineryConfig {
  int iterations = 1000;
  DiscriminatorConfig disc_cfg = DiscriminatorConfig::refinement();
  double flag_threshold = 0.5;
  std::uint64_t rng_seed = 0;
  bool skip_refinement = false;

  void validate() const;
  friend bool operator==(const RefineryConfig&, const RefineryConfig&) = default;
};

struct Provenance {
  SamplerConfig sampler;
  RefineryConfig refinery;
  std::optional<std::uint64_t> master_seed;  // set by batch_generate
  std::optional<std::size_t> realisation;    // set by batch_generate
  int iterations_run = 0;
  std::vector<std::size_t> replacements;     // one entry per refinement round
};

struct SyntheticDataset {
  Matrix values;  // days x 24, dense
  std::string airport;
  DelayKind kind = DelayKind::Arrival;
  DelayUnit unit = DelayUnit::Minutes;
  Provenance provenance;
};

/// One refinement round, reported as it completes.
struct RoundRecord {
  int round = 0;
  std::size_t trained_on = 0;  // rows per class used for training
  std::size_t held_out = 0;
  std::size_t replaced = 0;
};

using RoundObserver = std::function<void(const RoundRecord&)>;

/// Builds `days` independent synthetic vectors, then runs r_cfg.iterations
/// rounds of: train a discriminator on a random half of the synthetic rows vs
/// a random half of the real rows, score the held-out synthetic rows, and
/// redraw those whose probability of being real is below flag_threshold.
///
/// Sampler draws use streams derived from s_cfg.rng_seed; splits and
/// discriminator training use streams derived from r_cfg.rng_seed.
SyntheticDataset assemble(const DelayMatrix& real, const SamplerConfig& s_cfg, const RefineryConfig& r_cfg,
                          const RoundObserver& observer = {});

using BatchObserver = std::function<void(std::size_t realisation, const RoundRecord&)>;

/// `n_realisations` datasets; realisation i runs assemble with both seeds
/// derived from (master_seed, i). With threads > 1 the observer is called
/// concurrently for different realisations.
std::vector<SyntheticDataset> batch_generate(const DelayMatrix& real, const SamplerConfig& s_cfg,
                                             const RefineryConfig& r_cfg, std::size_t n_realisations,
                                             std::uint64_t master_seed, int threads = 1,
                                             const BatchObserver& observer = {});

nlohmann::json to_json(const SamplerConfig& cfg);
nlohmann::json to_json(const DiscriminatorConfig& cfg);
nlohmann::json to_json(const RefineryConfig& cfg);
nlohmann::json to_json(const Provenance& provenance);
nlohmann::json to_json(const RoundRecord& record);

}  // namespace delaysynth

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delaysynth/delay_matrix.hpp"
#include "delaysynth/discriminator.hpp"
#include "delaysynth/ingest.hpp"
#include "delaysynth/propagation.hpp"
#include "delaysynth/refinery.hpp"
#include "delaysynth/sampler.hpp"
#include "json.hpp"

namespace delaysynth::cli {

/// Bad command line or configuration (exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IngestSettings {
  CsvSchema schema;
  std::size_t top_n = 30;
  std::optional<Date> first_day;
  std::optional<Date> last_day;
  std::string default_timezone = "UTC";
  std::map<std::string, std::string> timezones;  // airport -> zone name
};

struct EvaluationSettings {
  std::size_t n_datasets = 100;
  int n_repeats = 1;
  bool cross_classification = false;
};

struct RunConfig {
  Region region = Region::eu();
  std::vector<std::string> airports;  // empty: every matrix found in the input
  std::vector<DelayKind> kinds{DelayKind::Arrival, DelayKind::Departure};
  std::size_t n_realisations = 100;
  std::optional<std::size_t> days;  // expected day count; checked before writing
  std::uint64_t master_seed = 0;
  int threads = 1;
  SamplerConfig sampler;
  RefineryConfig refinery;
  DiscriminatorConfig discriminator_eval = DiscriminatorConfig::evaluation();
  EvaluationSettings evaluation;
  GcConfig gc;
  std::optional<std::uint64_t> gc_seed;  // shuffling seed; derived from master_seed when unset
  IngestSettings ingest;

  /// Desk-scale run: 50 refinement rounds, 5 realisations, 10 repeats.
  void apply_profile(std::string_view profile);
  void validate() const;
};

/// Every key is optional; unknown keys are a UsageError so typos surface.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

nlohmann::json to_json(const RunConfig& cfg);

/// "<REGION><Kind>", e.g. "EUArr".
std::string tensor_stem(const Region& region, DelayKind kind);
/// "<AIRPORT>_<Arr|Dep>.npy"
std::string matrix_file_name(const std::string& airport, DelayKind kind);

}  // namespace delaysynth::cli

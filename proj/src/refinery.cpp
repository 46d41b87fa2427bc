#include "delaysynth/refinery.hpp"

#include <numeric>

#include "delaysynth/parallel.hpp"

namespace delaysynth {
namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitialDraw = 1;
constexpr std::uint64_t kRedraw = 2;
constexpr std::uint64_t kSplit = 10;
constexpr std::uint64_t kTraining = 11;

void write_row(Matrix& m, std::size_t row, const DelayVector& v) {
  std::copy(v.values.begin(), v.values.end(), m.row(row).begin());
}

}  // namespace

void RefineryConfig::validate() const {
  if (iterations < 0) throw ArgumentError("refinery: iterations must be >= 0");
  if (!(flag_threshold > 0.0 && flag_threshold < 1.0)) throw ArgumentError("refinery: flag_threshold must be in (0, 1)");
  disc_cfg.validate();
}

SyntheticDataset assemble(const DelayMatrix& real, const SamplerConfig& s_cfg, const RefineryConfig& r_cfg,
                          const RoundObserver& observer) {
  r_cfg.validate();
  const ConditionalSampler sampler(real, s_cfg);
  const std::size_t days = real.days();
  if (days == 0) throw ArgumentError("assemble: real matrix has no days");

  SyntheticDataset out;
  out.airport = real.airport;
  out.kind = real.kind;
  out.unit = real.unit;
  out.values = Matrix(days, kHours);
  out.provenance.sampler = s_cfg;
  out.provenance.refinery = r_cfg;
  for (std::size_t d = 0; d < days; ++d) {
    Rng rng(derive_seed(s_cfg.rng_seed, {kInitialDraw, d}));
    write_row(out.values, d, sampler.generate(rng));
  }
  if (r_cfg.skip_refinement || r_cfg.iterations == 0) return out;
  if (days < 2) throw ArgumentError("assemble: refinement needs at least two days");

  std::vector<std::size_t> synth_idx(days), real_idx(days);
  for (int round = 0; round < r_cfg.iterations; ++round) {
    const auto r = static_cast<std::uint64_t>(round);
    Rng split_rng(derive_seed(r_cfg.rng_seed, {kSplit, r}));
    std::iota(synth_idx.begin(), synth_idx.end(), 0);
    std::iota(real_idx.begin(), real_idx.end(), 0);
    shuffle(synth_idx.begin(), synth_idx.end(), split_rng);
    shuffle(real_idx.begin(), real_idx.end(), split_rng);
    const std::size_t half = days / 2;
    const auto train_synth = std::span<const std::size_t>(synth_idx).first(half);
    const auto held_out = std::span<const std::size_t>(synth_idx).subspan(half);

    DiscriminatorConfig disc = r_cfg.disc_cfg;
    disc.rng_seed = derive_seed(r_cfg.rng_seed, {kTraining, r});
    const auto model = train(LabeledSet::from_classes(take_rows(real.values, std::span(real_idx).first(half)),
                                                      take_rows(out.values, train_synth)),
                             disc);
    const auto p_real = predict(model, take_rows(out.values, held_out));

    std::size_t replaced = 0;
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      if (p_real[i] >= r_cfg.flag_threshold) continue;
      Rng rng(derive_seed(s_cfg.rng_seed, {kRedraw, r, held_out[i]}));
      write_row(out.values, held_out[i], sampler.generate(rng));
      ++replaced;
    }
    out.provenance.replacements.push_back(replaced);
    out.provenance.iterations_run = round + 1;
    if (observer) observer({round, half, held_out.size(), replaced});
  }
  return out;
}

std::vector<SyntheticDataset> batch_generate(const DelayMatrix& real, const SamplerConfig& s_cfg,
                                             const RefineryConfig& r_cfg, std::size_t n_realisations,
                                             std::uint64_t master_seed, int threads,
                                             const BatchObserver& observer) {
  if (n_realisations < 1) throw ArgumentError("batch_generate: n_realisations must be >= 1");
  std::vector<SyntheticDataset> out(n_realisations);
  parallel_for(n_realisations, threads, [&](std::size_t i) {
    SamplerConfig s = s_cfg;
    RefineryConfig r = r_cfg;
    s.rng_seed = derive_seed(master_seed, {i, 0});
    r.rng_seed = derive_seed(master_seed, {i, 1});
    RoundObserver per_round;
    if (observer) per_round = [&observer, i](const RoundRecord& rec) { observer(i, rec); };
    out[i] = assemble(real, s, r, per_round);
    out[i].provenance.master_seed = master_seed;
    out[i].provenance.realisation = i;
  });
  return out;
}

nlohmann::json to_json(const SamplerConfig& cfg) {
  return {{"night_hours", cfg.night_hours},
          {"n_quantiles", cfg.n_quantiles},
          {"rng_seed", cfg.rng_seed},
          {"variant", std::string(to_string(cfg.variant))}};
}

nlohmann::json to_json(const DiscriminatorConfig& cfg) {
  return {{"n_blocks", cfg.n_blocks},       {"layers_per_block", cfg.layers_per_block},
          {"filters", cfg.filters},         {"kernel_size", cfg.kernel_size},
          {"epochs", cfg.epochs},           {"learning_rate", cfg.learning_rate},
          {"l2_rate", cfg.l2_rate},         {"batch_size", cfg.batch_size},
          {"rng_seed", cfg.rng_seed}};
}

nlohmann::json to_json(const RefineryConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"discriminator", to_json(cfg.disc_cfg)},
          {"flag_threshold", cfg.flag_threshold},
          {"rng_seed", cfg.rng_seed},
          {"skip_refinement", cfg.skip_refinement}};
}

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j = {{"sampler", to_json(p.sampler)},
                      {"refinery", to_json(p.refinery)},
                      {"iterations_run", p.iterations_run},
                      {"replacements", p.replacements}};
  j["master_seed"] = p.master_seed ? nlohmann::json(*p.master_seed) : nlohmann::json();
  j["realisation"] = p.realisation ? nlohmann::json(*p.realisation) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const RoundRecord& record) {
  return {{"round", record.round},
          {"trained_on", record.trained_on},
          {"held_out", record.held_out},
          {"replaced", record.replaced}};
}

}  // namespace delaysynth

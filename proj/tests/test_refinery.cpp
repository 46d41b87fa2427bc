#include <cmath>

#include "delaysynth/refinery.hpp"
#include "delaysynth/toy.hpp"
#include "doctest.h"
#include "support/sampler_oracle.hpp"
#include "support/stats.hpp"

using namespace delaysynth;

namespace {

RefineryConfig quick(int iterations) {
  RefineryConfig cfg;
  cfg.iterations = iterations;
  cfg.disc_cfg.filters = 8;
  cfg.disc_cfg.epochs = 10;
  cfg.rng_seed = 5;
  return cfg;
}

DelayMatrix uniform_matrix(std::size_t days, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(days, kHours);
  for (auto& x : m.data()) x = 100.0 * rng.uniform();
  return DelayMatrix::dense("UNI", DelayKind::Arrival, DelayUnit::Minutes, m);
}

}  // namespace

TEST_CASE("configuration validation") {
  RefineryConfig cfg;
  CHECK(cfg.iterations == 1000);
  CHECK(cfg.disc_cfg.epochs == 20);
  CHECK_NOTHROW(cfg.validate());
  cfg.flag_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg.flag_threshold = 0.5;
  cfg.iterations = -1;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("zero rounds is the initial assembly") {
  const auto real = toy::delay_matrix(toy::ProcessParams{.days = 40}, 1);
  SamplerConfig s_cfg;
  s_cfg.rng_seed = 9;
  const auto none = assemble(real, s_cfg, quick(0));
  auto skip_cfg = quick(5);
  skip_cfg.skip_refinement = true;
  const auto skipped = assemble(real, s_cfg, skip_cfg);
  CHECK(none.values.rows() == 40);
  CHECK(none.provenance.replacements.empty());
  CHECK(none.provenance.iterations_run == 0);
  CHECK(skipped.values == none.values);
  CHECK(skipped.provenance.replacements.empty());
  CHECK(none.airport == real.airport);
  CHECK(none.unit == real.unit);
}

TEST_CASE("replacement log and sampler invariants after refinement") {
  const auto real = toy::delay_matrix(toy::ProcessParams{.days = 61}, 2);
  SamplerConfig s_cfg;
  s_cfg.rng_seed = 3;
  std::vector<RoundRecord> rounds;
  const auto out = assemble(real, s_cfg, quick(8), [&](const RoundRecord& r) { rounds.push_back(r); });

  REQUIRE(out.provenance.replacements.size() == 8);
  CHECK(out.provenance.iterations_run == 8);
  REQUIRE(rounds.size() == 8);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    CHECK(rounds[i].round == static_cast<int>(i));
    CHECK(rounds[i].trained_on == 30);
    CHECK(rounds[i].held_out == 31);
    CHECK(rounds[i].replaced == out.provenance.replacements[i]);
    CHECK(out.provenance.replacements[i] <= 31);
  }
  CHECK(out.values.rows() == real.days());

  const teststats::SamplerOracle oracle(real, s_cfg.night_hours, s_cfg.n_quantiles);
  teststats::SamplerOracle::Violations v;
  for (std::size_t d = 0; d < out.values.rows(); ++d) {
    oracle.check(out.values.row(d), v);
    for (double x : out.values.row(d)) CHECK(std::isfinite(x));
  }
  CHECK(v.membership == 0);
  CHECK(v.range == 0);
}

TEST_CASE("chance-level discriminator flags about half the held-out rows") {
  const auto real = uniform_matrix(120, 4);
  SamplerConfig s_cfg;
  s_cfg.variant = SamplerVariant::RandomDraw;
  double flagged = 0.0, held = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto r_cfg = quick(10);
    r_cfg.rng_seed = seed;
    s_cfg.rng_seed = seed;
    std::vector<RoundRecord> rounds;
    assemble(real, s_cfg, r_cfg, [&](const RoundRecord& r) { rounds.push_back(r); });
    for (const auto& r : rounds) {
      flagged += static_cast<double>(r.replaced);
      held += static_cast<double>(r.held_out);
    }
  }
  const double fraction = flagged / held;
  MESSAGE("replacement fraction " << fraction);
  CHECK(fraction >= 0.35);
  CHECK(fraction <= 0.65);
}

TEST_CASE("batch generation is deterministic and realisations differ") {
  const auto real = toy::delay_matrix(toy::ProcessParams{.days = 30}, 6);
  const SamplerConfig s_cfg;
  const auto a = batch_generate(real, s_cfg, quick(2), 2, 77);
  const auto b = batch_generate(real, s_cfg, quick(2), 2, 77, 2);
  REQUIRE(a.size() == 2);
  CHECK(a[0].values == b[0].values);
  CHECK(a[1].values == b[1].values);
  CHECK(a[0].values != a[1].values);
  CHECK(a[1].provenance.master_seed == 77u);
  CHECK(a[1].provenance.realisation == 1u);

  const auto single = batch_generate(real, s_cfg, quick(2), 1, 77);
  CHECK(single[0].values == a[0].values);
  CHECK(batch_generate(real, s_cfg, quick(2), 1, 78)[0].values != a[0].values);
  CHECK_THROWS_AS(batch_generate(real, s_cfg, quick(2), 0, 77), ArgumentError);

  const auto j = to_json(a[0].provenance);
  CHECK(j.at("replacements").size() == 2);
}

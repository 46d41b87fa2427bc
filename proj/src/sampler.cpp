#include "delaysynth/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace delaysynth {

std::string_view to_string(SamplerVariant variant) {
  return variant == SamplerVariant::Full ? "Full" : "RandomDraw";
}

SamplerVariant parse_variant(std::string_view text) {
  if (text == "Full" || text == "full") return SamplerVariant::Full;
  if (text == "RandomDraw" || text == "random_draw" || text == "random-draw") return SamplerVariant::RandomDraw;
  throw ArgumentError("unknown sampler variant '" + std::string(text) + "'");
}

void SamplerConfig::validate() const {
  if (night_hours < 0 || night_hours >= static_cast<int>(kHours))
    throw ArgumentError("sampler: night_hours must be in [0, 24)");
  if (n_quantiles < 2) throw ArgumentError("sampler: n_quantiles must be >= 2");
}

std::vector<double> quantile_edges(std::span<const double> samples, int k) {
  if (samples.empty()) throw ArgumentError("quantile_edges: empty sample");
  if (k < 1) throw ArgumentError("quantile_edges: k must be >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> edges(static_cast<std::size_t>(k) + 1);
  edges.front() = sorted.front();
  edges.back() = sorted.back();
  for (int i = 1; i < k; ++i) {
    const double h = static_cast<double>(n - 1) * i / k;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    edges[static_cast<std::size_t>(i)] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  // Interpolation can break monotonicity by an ulp when neighbours are equal.
  for (std::size_t i = 1; i < edges.size(); ++i) edges[i] = std::max(edges[i], edges[i - 1]);
  return edges;
}

std::size_t locate_bin(std::span<const double> edges, double x) {
  if (edges.size() < 2) return 0;
  const std::size_t bins = edges.size() - 1;
  const auto above = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
  if (above == 0) return 0;
  return std::min(above - 1, bins - 1);
}

ConditionalSampler::ConditionalSampler(const DelayMatrix& real, const SamplerConfig& cfg)
    : cfg_(cfg), airport_(real.airport), kind_(real.kind) {
  cfg.validate();
  if (real.values.cols() != kHours) throw ArgumentError("sampler: real matrix must have 24 columns");
  if (real.mask.size() != real.days() * kHours) throw ArgumentError("sampler: mask shape mismatch");
  for (std::size_t h = 0; h < kHours; ++h)
    for (std::size_t d = 0; d < real.days(); ++d)
      if (real.observed(d, h)) observed_[h].push_back(real.values(d, h));

  const std::size_t bins = static_cast<std::size_t>(cfg.n_quantiles);
  for (std::size_t h = 1; h < kHours; ++h) {
    if (observed_[h - 1].empty()) continue;
    Transition& tr = transitions_[h];
    tr.prev_edges = quantile_edges(observed_[h - 1], cfg.n_quantiles);
    tr.next_values.resize(bins);
    tr.next_edges.resize(bins);
    for (std::size_t d = 0; d < real.days(); ++d) {
      if (!real.observed(d, h - 1) || !real.observed(d, h)) continue;
      tr.next_values[locate_bin(tr.prev_edges, real.values(d, h - 1))].push_back(real.values(d, h));
    }
    for (std::size_t b = 0; b < bins; ++b)
      if (!tr.next_values[b].empty()) tr.next_edges[b] = quantile_edges(tr.next_values[b], cfg.n_quantiles);
  }
}

double ConditionalSampler::draw_unconditional(std::size_t hour, Rng& rng) const {
  const auto& pool = observed_[hour];
  if (pool.empty()) return 0.0;  // never observed: fall back to the fill value
  return pool[rng.below(pool.size())];
}

double ConditionalSampler::draw_from_edges(std::span<const double> edges, Rng& rng) const {
  const std::size_t bins = edges.size() - 1;
  const std::size_t j = rng.below(bins);
  const double lo = edges[j];
  const double hi = edges[j + 1];
  if (hi <= lo) return lo;
  // [lo, hi) except the last bin, which is closed.
  const double u = j + 1 == bins ? rng.uniform_closed() : rng.uniform();
  return std::min(lo + u * (hi - lo), hi);
}

double ConditionalSampler::draw_conditional(std::size_t hour, double previous, Rng& rng) const {
  const Transition& tr = transitions_[hour];
  if (tr.prev_edges.empty()) return draw_unconditional(hour, rng);
  const std::size_t bin = locate_bin(tr.prev_edges, previous);
  if (!tr.next_values[bin].empty()) return draw_from_edges(tr.next_edges[bin], rng);

  // Empty bin: widen to the adjacent bins before giving up on conditioning.
  std::vector<double> widened;
  const std::size_t first = bin == 0 ? 0 : bin - 1;
  const std::size_t last = std::min(bin + 1, tr.next_values.size() - 1);
  for (std::size_t b = first; b <= last; ++b)
    widened.insert(widened.end(), tr.next_values[b].begin(), tr.next_values[b].end());
  if (widened.empty()) return draw_unconditional(hour, rng);
  const auto edges = quantile_edges(widened, cfg_.n_quantiles);
  return draw_from_edges(edges, rng);
}

DelayVector ConditionalSampler::generate(Rng& rng) const {
  DelayVector out;
  out.airport = airport_;
  out.kind = kind_;
  const auto night = static_cast<std::size_t>(cfg_.night_hours);
  for (std::size_t h = 0; h < kHours; ++h) {
    const bool unconditional = cfg_.variant == SamplerVariant::RandomDraw || h < night || h == 0;
    out.values[h] = unconditional ? draw_unconditional(h, rng) : draw_conditional(h, out.values[h - 1], rng);
  }
  return out;
}

DelayVector generate_vector(const DelayMatrix& real, const SamplerConfig& cfg, Rng& rng) {
  return ConditionalSampler(real, cfg).generate(rng);
}

}  // namespace delaysynth

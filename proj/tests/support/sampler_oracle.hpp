#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include "delaysynth/delay_matrix.hpp"

namespace teststats {

// Brute-force checker for the sampler's support: night hours must reproduce
// real values, later hours must stay within the range of real next-hour
// values whose previous hour fell in the same decile as the synthetic one.
class SamplerOracle {
 public:
  SamplerOracle(const delaysynth::DelayMatrix& real, int night_hours, int k)
      : real_(real), night_(static_cast<std::size_t>(night_hours)), k_(k) {
    using delaysynth::kHours;
    columns_.resize(kHours);
    edges_.resize(kHours);
    for (std::size_t h = 0; h < kHours; ++h) {
      for (std::size_t d = 0; d < real.days(); ++d)
        if (real.observed(d, h)) columns_[h].insert(real.values(d, h));
      if (h == 0) continue;
      std::vector<double> prev;
      for (std::size_t d = 0; d < real.days(); ++d)
        if (real.observed(d, h - 1)) prev.push_back(real.values(d, h - 1));
      std::sort(prev.begin(), prev.end());
      for (int i = 0; i <= k; ++i) {
        const double pos = double(i) / k * double(prev.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = static_cast<std::size_t>(std::ceil(pos));
        edges_[h].push_back(prev[lo] + (pos - std::floor(pos)) * (prev[hi] - prev[lo]));
      }
    }
  }

  struct Violations {
    std::size_t membership = 0;
    std::size_t range = 0;
    std::size_t unchecked = 0;  // conditional set empty: the sampler widened or fell back
  };

  void check(std::span<const double> v, Violations& out) const {
    for (std::size_t h = 0; h < v.size(); ++h) {
      if (h < night_) {
        out.membership += columns_[h].count(v[h]) == 0;
        continue;
      }
      const std::size_t b = bin(h, v[h - 1]);
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t d = 0; d < real_.days(); ++d) {
        if (!real_.observed(d, h - 1) || !real_.observed(d, h)) continue;
        if (bin(h, real_.values(d, h - 1)) != b) continue;
        lo = std::min(lo, real_.values(d, h));
        hi = std::max(hi, real_.values(d, h));
      }
      if (lo > hi) {
        ++out.unchecked;
        continue;
      }
      out.range += v[h] < lo || v[h] > hi;
    }
  }

 private:
  std::size_t bin(std::size_t h, double x) const {
    std::size_t b = 0;
    for (std::size_t i = 1; i + 1 < edges_[h].size(); ++i)
      if (x >= edges_[h][i]) b = i;
    return b;
  }

  const delaysynth::DelayMatrix& real_;
  std::size_t night_;
  int k_;
  std::vector<std::multiset<double>> columns_;
  std::vector<std::vector<double>> edges_;
};

}  // namespace teststats

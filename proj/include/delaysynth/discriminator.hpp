#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "delaysynth/core.hpp"

namespace delaysynth {

/// Hyperparameters of the residual 1D convolutional classifier.
struct DiscriminatorConfig {
  int n_blocks = 2;
  int layers_per_block = 3;
  int filters = 32;
  int kernel_size = 5;
  int epochs = 50;
  double learning_rate = 1e-3;
  double l2_rate = 0.0;
  int batch_size = 32;
  std::uint64_t rng_seed = 0;

  void validate() const;

  /// Evaluation setting: 50 training epochs.
  static DiscriminatorConfig evaluation() { return {}; }
  /// Refinement setting: 20 training epochs.
  static DiscriminatorConfig refinement() {
    DiscriminatorConfig cfg;
    cfg.epochs = 20;
    return cfg;
  }

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// Rows of 24 hourly values with a binary label each (true = real / positive class).
struct LabeledSet {
  Matrix vectors;
  std::vector<bool> labels;

  static LabeledSet from_classes(const Matrix& positives, const Matrix& negatives);
};

/// A trained (or freshly initialised) classifier.
///
/// Weight layout, in order, for each block b and layer l within it:
///   conv kernel  [kernel_size][in_channels][filters]
///   conv bias    [filters]
/// then, if the block's input channel count differs from `filters`,
///   shortcut 1x1 kernel [in_channels][filters], shortcut bias [filters].
/// The affine head follows: weights [filters][2], bias [2], where column 0 is
/// the synthetic/negative logit and column 1 the real/positive logit.
/// The first block sees a single channel (the z-scored input).
struct DiscriminatorModel {
  DiscriminatorConfig cfg;
  std::vector<double> weights;
  std::vector<double> input_mean;  // per hour
  std::vector<double> input_std;   // per hour, strictly positive

  friend bool operator==(const DiscriminatorModel&, const DiscriminatorModel&) = default;
};

/// Number of weights implied by a configuration.
std::size_t weight_count(const DiscriminatorConfig& cfg);

/// He-initialised convolutions, zero head, identity normalisation.
DiscriminatorModel initial_model(const DiscriminatorConfig& cfg);

DiscriminatorModel train(const LabeledSet& data, const DiscriminatorConfig& cfg);

/// Probability of the positive (real) class for each row.
std::vector<double> predict(const DiscriminatorModel& model, const Matrix& vectors);

/// n x 2 class probabilities: column 0 negative, column 1 positive.
Matrix predict_classes(const DiscriminatorModel& model, const Matrix& vectors);

/// Fraction of rows on the correct side of 0.5; exact ties count as wrong.
double accuracy(const DiscriminatorModel& model, const LabeledSet& data);

/// Mean cross-entropy plus the L2 penalty on convolution kernels, evaluated on
/// the whole set as one batch. If `gradient` is non-null it receives
/// d(loss)/d(weights), sized like model.weights.
double batch_loss(const DiscriminatorModel& model, const LabeledSet& data, std::vector<double>* gradient);

/// Binary layout: "DSYNDISC" magic, u32 LE header length, JSON header
/// (config, normalisation, weight count), then the weights as LE float64.
void save_model(const DiscriminatorModel& model, const std::filesystem::path& path);
DiscriminatorModel load_model(const std::filesystem::path& path);

struct ScoreDistribution {
  std::vector<double> scores;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

ScoreDistribution summarize_scores(std::vector<double> scores);

/// Held-out accuracy of a classifier separating `positives` from `negatives`.
/// Each repeat trains on a uniformly random floor(n/2) of each class and is
/// scored on the pooled remainder. When both classes have the same row count
/// they are split with one shared permutation (row i of either class falls on
/// the same side). Repeat r uses seeds derived from
/// (cfg.rng_seed, r), so results do not depend on `threads`.
ScoreDistribution holdout_accuracy(const Matrix& positives, const Matrix& negatives,
                                   const DiscriminatorConfig& cfg, int n_repeats, int threads = 1);

/// Discriminative score: held-out accuracy of real (positive) vs synthetic.
/// 0.5 means the two sets are indistinguishable.
ScoreDistribution discriminative_score(const Matrix& real, const Matrix& synthetic,
                                       const DiscriminatorConfig& cfg, int n_repeats, int threads = 1);

}  // namespace delaysynth

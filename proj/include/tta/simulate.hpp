#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tta/augment.hpp"
#include "tta/core.hpp"

namespace tta {

/// A black-box classifier with planted per-(augmentation, class) accuracy.
/// Matrices are augmentation-major, M x C.
struct SyntheticWorld {
  std::size_t c = 2;
  std::size_t m = 1;
  std::vector<double> correct_prob;         // chance slice m predicts the true class c
  std::vector<ClassIndex> confusion_target;  // class predicted by slice m when class c is wrong
  double concentration = 4.0;                // larger means more peaked rows
  std::uint64_t seed = 0;
  bool tied_slices = false;                  // every slice copies slice 0

  double correct(std::size_t aug, std::size_t cls) const { return correct_prob[aug * c + cls]; }
  ClassIndex confusion(std::size_t aug, std::size_t cls) const { return confusion_target[aug * c + cls]; }
  void validate() const;
};

struct LabeledTensor {
  PredictionTensor preds;
  LabeledSet labels;
};

/// Uniform labels; each (i, m) row is a probability vector whose argmax is the
/// true class with probability correct_prob[m][y], otherwise the confusion target.
/// The argmax mass is 1/2 + U^(1/concentration) / 2, which keeps it strictly the largest.
LabeledTensor emit(const SyntheticWorld& world, std::size_t n);

SyntheticWorld invariant_world(const SyntheticWorld& base);

/// Two classes, two views. The identity view is right 80% of the time on both
/// classes; the second view is right 50% on class 0 but 99% on class 1, so the
/// best aggregation weights depend on the class.
SyntheticWorld planted_class_asymmetry(std::uint64_t seed = 0);

// Random correctness in [low, high] and random confusion targets.
SyntheticWorld random_world(std::size_t c, std::size_t m, std::uint64_t seed, double low = 0.3, double high = 0.95);

SyntheticWorld reseeded(SyntheticWorld world, std::uint64_t seed);

/// Class-dependent log-likelihood-ratio weights for one-hot votes:
/// theta[m][c] = max(0, ln(P(vote c | y = c) / P(vote c | y != c))), the second
/// term averaged over the other classes. Exact Bayes rule for C = 2 with uniform labels.
AggregationWeights bayes_weights(const SyntheticWorld& world);

/// Linear softmax classifier over raw pixels scaled to [0, 1].
struct ToyConfig {
  double step_size = 0.5;
  std::size_t epochs = 300;
  double l2 = 0.0;
  std::uint64_t seed = 0;
};

struct ToyClassifier {
  std::size_t inputs = 0;
  std::size_t classes = 0;
  std::vector<double> weights;  // inputs x classes
  std::vector<double> bias;

  ScoreVector logits(const Image& img) const;
};

/// Full-batch gradient descent on the first round(train_fraction * n) inputs of a
/// seeded shuffle, so larger fractions see supersets of smaller ones.
ToyClassifier train_toy(std::span<const Image> images, const LabeledSet& labels, double train_fraction,
                        const ToyConfig& cfg);

// Runs the classifier on every policy view and packs a Logits tensor.
PredictionTensor toy_logits(const ToyClassifier& clf, std::span<const Image> images, const AugmentationPolicy& policy);

struct ImageSet {
  std::vector<Image> images;
  LabeledSet labels;
};

/// Gray blobs around per-class prototypes that are symmetric under both flips,
/// so the flips policy preserves the class distribution. Pixel noise is Gaussian.
ImageSet make_blobs(std::size_t classes, std::size_t side, std::size_t n, double noise, std::uint64_t seed);

// Same prototypes (fixed by `prototype_seed`), independent noise draws.
ImageSet make_blobs(std::size_t classes, std::size_t side, std::size_t n, double noise, std::uint64_t prototype_seed,
                    std::uint64_t sample_seed);

struct DatasetSizePoint {
  double train_fraction;
  double raw_accuracy;
  double mean_accuracy;
  double net_improvement_pct;  // Mean-TTA corrected minus corrupted, percent
};

struct DatasetSizeConfig {
  std::vector<double> fractions{0.01, 0.05, 0.1, 0.25, 0.5, 1.0};
  std::size_t classes = 4;
  std::size_t side = 8;
  std::size_t pool = 2000;
  std::size_t test = 2000;
  double noise = 80.0;
  std::size_t repeats = 3;  // independent worlds averaged per fraction
  ToyConfig toy{};
  std::uint64_t seed = 0;
};

// One world of the dataset-size experiment, with the flips-policy test logits
// of the classifier trained at each fraction.
struct DatasetSizeWorld {
  ImageSet pool;
  ImageSet test;
  std::uint64_t toy_seed = 0;  // also the seed of the nested training subsets
  std::vector<PredictionTensor> test_logits;
  std::vector<DatasetSizePoint> points;
};

DatasetSizeWorld dataset_size_world(const DatasetSizeConfig& cfg, std::size_t repeat);

/// Toy classifiers at increasing training fractions, evaluated with the flips
/// policy; the net improvement is averaged over `repeats` worlds.
std::vector<DatasetSizePoint> dataset_size_trend(const DatasetSizeConfig& cfg);

// IDX files (MNIST layout): big-endian dims after a 16-byte image / 8-byte label header.
std::vector<Image> read_idx_images(const std::filesystem::path& path);
std::vector<ClassIndex> read_idx_labels(const std::filesystem::path& path);

}  // namespace tta

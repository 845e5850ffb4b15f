#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tta/core.hpp"

namespace tta {

/// N x C scores, input-major.
struct ScoreMatrix {
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * c, c);
  }
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double epsilon = 1e-12;  // normalization floor in the loss

  void validate() const;
};

// Shape of the trainable parameter vector.
struct ParamShape {
  WeightMode mode;
  std::size_t m;
  std::size_t c;

  std::size_t size() const { return AggregationWeights::parameter_count(mode, m, c); }
};

enum class AggregationMethod { Raw, Mean, Gps, Learned };

/// A fitted aggregation rule g over one policy's M views and C classes.
class Aggregator {
 public:
  static Aggregator raw(std::size_t m, std::size_t c);
  static Aggregator mean(std::size_t m, std::size_t c);
  static Aggregator gps(std::vector<std::size_t> selected, std::size_t m, std::size_t c);
  static Aggregator learned(AggregationWeights weights);

  AggregationMethod method() const noexcept { return method_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t c() const noexcept { return c_; }
  std::span<const std::size_t> gps_selection() const noexcept { return selected_; }
  const AggregationWeights& weights() const;

  // Per-input aggregated scores. Learned consumes probabilities; the baselines
  // use the stored scores as they are.
  ScoreMatrix scores(const PredictionTensor& preds) const;

 private:
  Aggregator(AggregationMethod method, std::size_t m, std::size_t c) : method_(method), m_(m), c_(c) {}

  AggregationMethod method_;
  std::size_t m_;
  std::size_t c_;
  std::vector<std::size_t> selected_;
  std::optional<AggregationWeights> weights_;
};

// ClassTTA: out[c] = sum_m theta[m][c] * preds[m][c]. Both inputs are M x C, augmentation-major.
ScoreVector forward_class(std::span<const double> theta, std::span<const float> preds, std::size_t m,
                          std::size_t c);

// AugTTA: out[c] = sum_m theta[m] * preds[m][c].
ScoreVector forward_aug(std::span<const double> theta, std::span<const float> preds, std::size_t m,
                        std::size_t c);

ScoreVector forward(const ParamShape& shape, std::span<const double> theta, std::span<const float> preds);

/// Mean over `batch` (all inputs when empty) of -log((g[y]+eps) / sum_c (g[c]+eps)),
/// plus weight_decay/2 * ||theta||^2. Scores in `probs` must be nonnegative
/// (normally probabilities).
double loss(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
            const LabeledSet& labels, const TrainConfig& cfg, std::span<const std::size_t> batch = {});

// Exact gradient of `loss` with respect to theta.
std::vector<double> gradient(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
                             const LabeledSet& labels, const TrainConfig& cfg,
                             std::span<const std::size_t> batch = {});

struct TrainStep {
  std::size_t epoch;  // 1-based
  std::size_t step;   // global optimizer step, 1-based
  double batch_loss;
  double min_weight;  // after projection
};

struct TrainResult {
  Aggregator aggregator;
  std::vector<double> val_accuracy;  // index 0 is the uniform initialization
  std::size_t best_epoch;
  std::size_t steps;
};

using TrainObserver = std::function<void(const TrainStep&)>;

/// Projected SGD with momentum from the uniform 1/M start. Every update is followed
/// by clamping to the nonnegative orthant; the checkpoint with the best validation
/// accuracy is returned (ties keep the earliest, the initialization counts as epoch 0).
TrainResult train(const PredictionTensor& train_preds, const LabeledSet& train_labels,
                  const PredictionTensor& val_preds, const LabeledSet& val_labels, WeightMode mode,
                  const TrainConfig& cfg, const TrainObserver& observer = {});

// Higher validation accuracy wins; a tie keeps the per-augmentation aggregator.
Aggregator select_mode(const Aggregator& class_agg, const Aggregator& aug_agg, const PredictionTensor& val_preds,
                       const LabeledSet& val_labels);

ScoreMatrix baseline_mean(const PredictionTensor& preds);
ScoreMatrix baseline_raw(const PredictionTensor& preds, std::size_t identity_index = 0);

/// Greedy policy search: picks `size` augmentations with replacement, each time the
/// one whose addition maximizes accuracy of the running mean (ties go to the lowest index).
Aggregator gps_search(const PredictionTensor& preds, const LabeledSet& labels, std::size_t size = 3);

std::vector<ClassIndex> argmax_rows(const ScoreMatrix& scores);
std::vector<ClassIndex> predict(const Aggregator& agg, const PredictionTensor& preds);

double accuracy_of(const Aggregator& agg, const PredictionTensor& preds, const LabeledSet& labels);

}  // namespace tta

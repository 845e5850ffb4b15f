#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tta/error.hpp"

namespace tta {

using ClassIndex = std::uint32_t;
using ScoreVector = std::vector<double>;

enum class ScoreKind : std::uint8_t { Logits = 0, Probabilities = 1 };

// Tolerance on the row sums of a Probabilities tensor.
inline constexpr double kProbabilityRowTolerance = 1e-4;

/// Scores for N inputs under M augmentations over C classes, stored input-major,
/// then augmentation, then class. Index 0 along M is the identity view.
class PredictionTensor {
 public:
  PredictionTensor(std::size_t n, std::size_t m, std::size_t c, ScoreKind kind,
                   std::vector<float> values);

  std::size_t n() const noexcept { return n_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t c() const noexcept { return c_; }
  ScoreKind kind() const noexcept { return kind_; }

  std::span<const float> values() const noexcept { return values_; }

  // The M x C block for input i.
  std::span<const float> block(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * m_ * c_, m_ * c_);
  }
  std::span<const float> row(std::size_t i, std::size_t aug) const noexcept {
    return std::span<const float>(values_).subspan((i * m_ + aug) * c_, c_);
  }
  float at(std::size_t i, std::size_t aug, std::size_t cls) const noexcept {
    return values_[(i * m_ + aug) * c_ + cls];
  }

  bool operator==(const PredictionTensor&) const = default;

 private:
  std::size_t n_;
  std::size_t m_;
  std::size_t c_;
  ScoreKind kind_;
  std::vector<float> values_;
};

/// Ground-truth labels paired with a PredictionTensor by input index.
class LabeledSet {
 public:
  LabeledSet(std::vector<ClassIndex> labels, std::size_t c);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t c() const noexcept { return c_; }
  std::span<const ClassIndex> labels() const noexcept { return labels_; }
  ClassIndex operator[](std::size_t i) const noexcept { return labels_[i]; }

  bool operator==(const LabeledSet&) const = default;

 private:
  std::vector<ClassIndex> labels_;
  std::size_t c_;
};

enum class WeightMode : std::uint8_t { PerAugmentation = 0, PerAugmentationClass = 1 };

/// Nonnegative aggregation parameters: M entries (PerAugmentation) or an
/// augmentation-major M x C matrix (PerAugmentationClass).
class AggregationWeights {
 public:
  AggregationWeights(WeightMode mode, std::size_t m, std::size_t c, std::vector<float> values);

  static std::size_t parameter_count(WeightMode mode, std::size_t m, std::size_t c) {
    return mode == WeightMode::PerAugmentation ? m : m * c;
  }

  WeightMode mode() const noexcept { return mode_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t c() const noexcept { return c_; }
  std::span<const float> values() const noexcept { return values_; }

  // Weight applied to class `cls` of augmentation `aug`, whatever the mode.
  float weight(std::size_t aug, std::size_t cls) const noexcept {
    return mode_ == WeightMode::PerAugmentation ? values_[aug] : values_[aug * c_ + cls];
  }

  bool operator==(const AggregationWeights&) const = default;

 private:
  WeightMode mode_;
  std::size_t m_;
  std::size_t c_;
  std::vector<float> values_;
};

// Numerically stable softmax (max-subtracted).
ScoreVector softmax(std::span<const double> logits);

/// Index of the largest score; ties go to the lowest index.
template <typename T>
std::size_t argmax_class(std::span<const T> scores) {
  require(!scores.empty(), ErrorCode::EmptyVector, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

template <typename T>
std::size_t argmax_class(const std::vector<T>& scores) {
  return argmax_class(std::span<const T>(scores));
}

/// Returns a Probabilities tensor; a tensor that already holds probabilities is
/// returned unchanged, otherwise every [i][m] row is passed through softmax.
PredictionTensor to_probabilities(const PredictionTensor& t);

}  // namespace tta

#include "tta/core.hpp"

#include <string>

namespace tta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::InvalidCropSize: return "InvalidCropSize";
    case ErrorCode::UnknownTransform: return "UnknownTransform";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::EmptySelectionPool: return "EmptySelectionPool";
    case ErrorCode::ProjectionViolation: return "ProjectionViolation";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptySubsample: return "EmptySubsample";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::NonMonotoneIncrements: return "NonMonotoneIncrements";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

PredictionTensor::PredictionTensor(std::size_t n, std::size_t m, std::size_t c, ScoreKind kind,
                                   std::vector<float> values)
    : n_(n), m_(m), c_(c), kind_(kind), values_(std::move(values)) {
  require(n_ >= 1 && m_ >= 1 && c_ >= 2, ErrorCode::InvariantViolation,
          "tensor needs n >= 1, m >= 1, c >= 2");
  require(values_.size() == n_ * m_ * c_, ErrorCode::DimensionMismatch,
          "tensor buffer holds " + std::to_string(values_.size()) + " values, expected n*m*c");
  for (float v : values_) {
    require(std::isfinite(v), ErrorCode::InvariantViolation, "tensor contains a non-finite value");
  }
  if (kind_ == ScoreKind::Probabilities) {
    for (std::size_t r = 0; r < n_ * m_; ++r) {
      double sum = 0.0;
      for (std::size_t k = 0; k < c_; ++k) {
        const float v = values_[r * c_ + k];
        require(v >= 0.0f, ErrorCode::InvariantViolation, "negative probability");
        sum += v;
      }
      require(std::abs(sum - 1.0) <= kProbabilityRowTolerance, ErrorCode::InvariantViolation,
              "probability row " + std::to_string(r) + " sums to " + std::to_string(sum));
    }
  }
}

LabeledSet::LabeledSet(std::vector<ClassIndex> labels, std::size_t c)
    : labels_(std::move(labels)), c_(c) {
  for (ClassIndex y : labels_) {
    require(y < c_, ErrorCode::LabelOutOfRange,
            "label " + std::to_string(y) + " outside [0, " + std::to_string(c_) + ")");
  }
}

AggregationWeights::AggregationWeights(WeightMode mode, std::size_t m, std::size_t c,
                                       std::vector<float> values)
    : mode_(mode), m_(m), c_(c), values_(std::move(values)) {
  require(mode_ == WeightMode::PerAugmentation || mode_ == WeightMode::PerAugmentationClass,
          ErrorCode::UnsupportedMode, "unknown weight mode");
  require(m_ >= 1 && c_ >= 2, ErrorCode::InvariantViolation, "weights need m >= 1, c >= 2");
  require(values_.size() == parameter_count(mode_, m_, c_), ErrorCode::DimensionMismatch,
          "weight payload size does not match mode and dimensions");
  for (float v : values_) {
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "non-finite weight");
    require(v >= 0.0f, ErrorCode::NegativeWeight, "weights must be nonnegative");
  }
}

ScoreVector softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorCode::EmptyVector, "softmax of an empty vector");
  for (double v : logits) {
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "softmax input is not finite");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  ScoreVector out(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - top);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

PredictionTensor to_probabilities(const PredictionTensor& t) {
  if (t.kind() == ScoreKind::Probabilities) return t;
  std::vector<float> out;
  out.reserve(t.values().size());
  std::vector<double> row(t.c());
  for (std::size_t i = 0; i < t.n(); ++i) {
    for (std::size_t a = 0; a < t.m(); ++a) {
      const auto src = t.row(i, a);
      std::copy(src.begin(), src.end(), row.begin());
      for (double p : softmax(row)) out.push_back(static_cast<float>(p));
    }
  }
  return PredictionTensor(t.n(), t.m(), t.c(), ScoreKind::Probabilities, std::move(out));
}

}  // namespace tta

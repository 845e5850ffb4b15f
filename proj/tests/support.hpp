#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tta/core.hpp"
#include "tta/rng.hpp"

namespace tta::fixtures {

// Random probability tensor; rows come from softmax of scaled normals.
inline PredictionTensor random_probs(std::size_t n, std::size_t m, std::size_t c, Rng& rng, double scale = 2.0) {
  std::vector<float> values;
  values.reserve(n * m * c);
  std::vector<double> logits(c);
  for (std::size_t r = 0; r < n * m; ++r) {
    for (auto& l : logits) l = scale * rng.normal();
    for (double p : softmax(logits)) values.push_back(static_cast<float>(p));
  }
  return PredictionTensor(n, m, c, ScoreKind::Probabilities, std::move(values));
}

inline PredictionTensor random_logits(std::size_t n, std::size_t m, std::size_t c, Rng& rng, double scale = 3.0) {
  std::vector<float> values(n * m * c);
  for (auto& v : values) v = static_cast<float>(scale * rng.normal());
  return PredictionTensor(n, m, c, ScoreKind::Logits, std::move(values));
}

inline LabeledSet random_labels(std::size_t n, std::size_t c, Rng& rng) {
  std::vector<ClassIndex> labels(n);
  for (auto& l : labels) l = static_cast<ClassIndex>(rng.below(c));
  return LabeledSet(std::move(labels), c);
}

inline std::vector<double> random_theta(std::size_t size, Rng& rng) {
  std::vector<double> theta(size);
  for (auto& t : theta) t = 0.05 + rng.uniform();
  return theta;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("tta_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tta::fixtures

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tta/core.hpp"

namespace tta {

struct ChangeReport {
  double corrected_pct = 0.0;
  double corrupted_pct = 0.0;
  double net_pct = 0.0;
  std::vector<std::size_t> corrected_indices;
  std::vector<std::size_t> corrupted_indices;
};

struct SignificanceResult {
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
};

struct SubsampleStats {
  std::vector<double> accuracies;  // one per subsample
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (k - 1)
};

double accuracy(std::span<const ClassIndex> predicted, const LabeledSet& truth);

/// Corrected: raw wrong and TTA right. Corrupted: raw right and TTA wrong.
/// Percentages are over all N inputs.
ChangeReport corrections_corruptions(std::span<const ClassIndex> raw, std::span<const ClassIndex> tta,
                                     const LabeledSet& truth);

// out[m] = fraction of inputs whose slice-m argmax matches the slice-0 argmax.
std::vector<double> agreement(const PredictionTensor& preds);

// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

/// Two-sided paired t-test on a - b.
SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b);

// k subsets of round(frac * n) indices each, drawn without replacement.
std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n, std::size_t k, double frac,
                                                        std::uint64_t seed);

/// Accuracy over k seeded subsamples; the same seed yields the same subsets for
/// every method, so results from different methods pair up.
SubsampleStats subsample_eval(std::span<const ClassIndex> predicted, const LabeledSet& truth, std::size_t k = 5,
                              double frac = 0.5, std::uint64_t seed = 0);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tta

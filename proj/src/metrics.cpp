#include "tta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tta/rng.hpp"

namespace tta {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  require(a == b, ErrorCode::LengthMismatch, "lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
}

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return v[l] < v[r]; });
  std::vector<double> ranks(v.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && v[order[end]] == v[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end - 1) + 1.0;
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

}  // namespace

double accuracy(std::span<const ClassIndex> predicted, const LabeledSet& truth) {
  check_lengths(predicted.size(), truth.size());
  require(!predicted.empty(), ErrorCode::EmptySet, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

ChangeReport corrections_corruptions(std::span<const ClassIndex> raw, std::span<const ClassIndex> tta,
                                     const LabeledSet& truth) {
  check_lengths(raw.size(), truth.size());
  check_lengths(tta.size(), truth.size());
  require(!raw.empty(), ErrorCode::EmptySet, "no predictions to compare");
  ChangeReport report;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const bool raw_ok = raw[i] == truth[i];
    const bool tta_ok = tta[i] == truth[i];
    if (!raw_ok && tta_ok) report.corrected_indices.push_back(i);
    if (raw_ok && !tta_ok) report.corrupted_indices.push_back(i);
  }
  const double scale = 100.0 / static_cast<double>(raw.size());
  report.corrected_pct = scale * static_cast<double>(report.corrected_indices.size());
  report.corrupted_pct = scale * static_cast<double>(report.corrupted_indices.size());
  report.net_pct = report.corrected_pct - report.corrupted_pct;
  return report;
}

std::vector<double> agreement(const PredictionTensor& preds) {
  std::vector<std::size_t> matches(preds.m(), 0);
  for (std::size_t i = 0; i < preds.n(); ++i) {
    const auto reference = argmax_class(preds.row(i, 0));
    for (std::size_t a = 0; a < preds.m(); ++a) matches[a] += argmax_class(preds.row(i, a)) == reference;
  }
  std::vector<double> out(preds.m());
  for (std::size_t a = 0; a < preds.m(); ++a) {
    out[a] = static_cast<double>(matches[a]) / static_cast<double>(preds.n());
  }
  return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument, "incomplete beta needs a, b > 0");
  require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidArgument, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  require(dof > 0.0, ErrorCode::InvalidArgument, "t distribution needs dof > 0");
  if (!std::isfinite(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(regularized_incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

SignificanceResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size());
  const std::size_t k = a.size();
  require(k >= 2, ErrorCode::InvalidArgument, "paired t-test needs at least two pairs");

  std::vector<double> diff(k);
  for (std::size_t i = 0; i < k; ++i) diff[i] = a[i] - b[i];
  require(std::any_of(diff.begin(), diff.end(), [&](double d) { return d != diff[0]; }),
          ErrorCode::DegenerateVariance, "all paired differences are equal");

  SignificanceResult r;
  const double kd = static_cast<double>(k);
  r.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / kd;
  r.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / kd;
  r.mean_difference = std::accumulate(diff.begin(), diff.end(), 0.0) / kd;
  double ss = 0.0;
  for (double d : diff) ss += (d - r.mean_difference) * (d - r.mean_difference);
  r.sd_difference = std::sqrt(ss / (kd - 1.0));
  require(r.sd_difference > 0.0, ErrorCode::DegenerateVariance, "zero variance of paired differences");
  r.dof = k - 1;
  r.t_statistic = r.mean_difference / (r.sd_difference / std::sqrt(kd));
  r.p_value = student_t_two_sided_p(r.t_statistic, static_cast<double>(r.dof));
  return r;
}

std::vector<std::vector<std::size_t>> subsample_indices(std::size_t n, std::size_t k, double frac,
                                                        std::uint64_t seed) {
  require(k >= 2, ErrorCode::InvalidArgument, "need at least two subsamples");
  require(frac > 0.0 && frac <= 1.0, ErrorCode::InvalidArgument, "subsample fraction must lie in (0, 1]");
  const auto size = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  require(size >= 1, ErrorCode::EmptySubsample, "subsample of " + std::to_string(n) + " inputs is empty");

  Rng rng(seed);
  std::vector<std::size_t> pool(n);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(pool));
    std::vector<std::size_t> pick(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(pick.begin(), pick.end());
    out.push_back(std::move(pick));
  }
  return out;
}

SubsampleStats subsample_eval(std::span<const ClassIndex> predicted, const LabeledSet& truth, std::size_t k,
                              double frac, std::uint64_t seed) {
  check_lengths(predicted.size(), truth.size());
  SubsampleStats stats;
  for (const auto& subset : subsample_indices(predicted.size(), k, frac, seed)) {
    std::size_t hits = 0;
    for (std::size_t i : subset) hits += predicted[i] == truth[i];
    stats.accuracies.push_back(static_cast<double>(hits) / static_cast<double>(subset.size()));
  }
  const double kd = static_cast<double>(stats.accuracies.size());
  stats.mean = std::accumulate(stats.accuracies.begin(), stats.accuracies.end(), 0.0) / kd;
  double ss = 0.0;
  for (double v : stats.accuracies) ss += (v - stats.mean) * (v - stats.mean);
  stats.stddev = std::sqrt(ss / (kd - 1.0));
  return stats;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_lengths(x.size(), y.size());
  require(x.size() >= 2, ErrorCode::InvalidArgument, "spearman needs at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace tta

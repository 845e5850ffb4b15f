#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "support.hpp"
#include "tta/aggregate.hpp"
#include "tta/augment.hpp"
#include "tta/io.hpp"
#include "tta/simulate.hpp"

using namespace tta;
using boost::multiprecision::cpp_bin_float_50;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tta::Error thrown";
  return ErrorCode::InvalidArgument;
}

std::vector<float> to_floats(std::initializer_list<double> v) { return {v.begin(), v.end()}; }

// Straightforward reimplementation of the objective in 50-digit arithmetic.
cpp_bin_float_50 reference_loss(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
                                const LabeledSet& labels, const TrainConfig& cfg) {
  using F = cpp_bin_float_50;
  const F eps(cfg.epsilon);
  F total = 0;
  for (std::size_t i = 0; i < probs.n(); ++i) {
    std::vector<F> g(shape.c, F(0));
    for (std::size_t a = 0; a < shape.m; ++a) {
      for (std::size_t k = 0; k < shape.c; ++k) {
        const double w = shape.mode == WeightMode::PerAugmentation ? theta[a] : theta[a * shape.c + k];
        g[k] += F(w) * F(probs.at(i, a, k));
      }
    }
    F mass = 0;
    for (const auto& v : g) mass += v + eps;
    total -= log((g[labels[i]] + eps) / mass);
  }
  F sq = 0;
  for (double t : theta) sq += F(t) * F(t);
  return total / F(probs.n()) + F(cfg.weight_decay) / 2 * sq;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    scale += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

std::vector<double> finite_difference(const ParamShape& shape, std::vector<double> theta, const PredictionTensor& p,
                                      const LabeledSet& y, const TrainConfig& cfg, double h = 1e-5) {
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    const double up = loss(shape, theta, p, y, cfg);
    theta[k] = keep - h;
    const double down = loss(shape, theta, p, y, cfg);
    theta[k] = keep;
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

// Copies slice 0 into every slice.
PredictionTensor tie_slices(const PredictionTensor& t) {
  std::vector<float> v;
  for (std::size_t i = 0; i < t.n(); ++i)
    for (std::size_t a = 0; a < t.m(); ++a) {
      const auto row = t.row(i, 0);
      v.insert(v.end(), row.begin(), row.end());
    }
  return PredictionTensor(t.n(), t.m(), t.c(), t.kind(), std::move(v));
}

}  // namespace

TEST(ForwardClass, SingleActiveWeight) {
  const std::vector<double> theta{1, 0, 0, 0};
  const auto out = forward_class(theta, to_floats({1, 0, 0, 1}), 2, 2);
  EXPECT_EQ(out, (ScoreVector{1.0, 0.0}));
}

TEST(ForwardClass, UniformWeightsGiveTheMean) {
  Rng rng(1);
  const auto p = fixtures::random_probs(1, 4, 3, rng);
  const std::vector<double> theta(12, 0.25);
  const auto out = forward_class(theta, p.block(0), 4, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t a = 0; a < 4; ++a) mean += p.at(0, a, k);
    EXPECT_NEAR(out[k], mean / 4.0, 1e-12);
  }
}

TEST(ForwardClass, MatchesDoubleLoop) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = fixtures::random_probs(1, 3, 4, rng);
    const auto theta = fixtures::random_theta(12, rng);
    const auto out = forward_class(theta, p.block(0), 3, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      double want = 0.0;
      for (std::size_t a = 0; a < 3; ++a) want += theta[a * 4 + k] * p.at(0, a, k);
      EXPECT_NEAR(out[k], want, 1e-12);
    }
  }
}

TEST(ForwardAug, Examples) {
  const auto preds = to_floats({0.8, 0.2, 0.2, 0.8});
  const auto half = forward_aug(std::vector<double>{0.5, 0.5}, preds, 2, 2);
  EXPECT_NEAR(half[0], 0.5, 1e-7);
  EXPECT_NEAR(half[1], 0.5, 1e-7);
  const auto sel = forward_aug(std::vector<double>{1.0, 0.0}, preds, 2, 2);
  EXPECT_EQ(sel[0], static_cast<double>(0.8f));
  EXPECT_EQ(sel[1], static_cast<double>(0.2f));
}

TEST(ForwardAug, EqualsTiedClassMatrix) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(6), c = 2 + rng.below(5);
    const auto p = fixtures::random_probs(1, m, c, rng);
    const auto theta = fixtures::random_theta(m, rng);
    std::vector<double> tied(m * c);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = 0; k < c; ++k) tied[a * c + k] = theta[a];
    const auto x = forward_aug(theta, p.block(0), m, c);
    const auto y = forward_class(tied, p.block(0), m, c);
    for (std::size_t k = 0; k < c; ++k) EXPECT_NEAR(x[k], y[k], 1e-12);
  }
}

TEST(Forward, DimensionMismatch) {
  EXPECT_EQ(code_of([] { forward_class(std::vector<double>{1, 0}, to_floats({1, 0, 0, 1}), 2, 2); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { forward_aug(std::vector<double>{1, 0, 0}, to_floats({1, 0, 0, 1}), 2, 2); }),
            ErrorCode::DimensionMismatch);
}

TEST(Loss, PerfectPredictionLeavesOnlyTheRegularizer) {
  const PredictionTensor p(3, 1, 3, ScoreKind::Probabilities, to_floats({1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const LabeledSet y({0, 1, 2}, 3);
  TrainConfig cfg;
  const std::vector<double> theta{1.0};
  EXPECT_NEAR(loss({WeightMode::PerAugmentation, 1, 3}, theta, p, y, cfg), 0.5 * cfg.weight_decay, 1e-11);
}

TEST(Loss, UniformIsLogTwo) {
  const PredictionTensor p(2, 2, 2, ScoreKind::Probabilities, std::vector<float>(8, 0.5f));
  const LabeledSet y({0, 1}, 2);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  const std::vector<double> theta(4, 0.5);
  EXPECT_NEAR(loss({WeightMode::PerAugmentationClass, 2, 2}, theta, p, y, cfg), std::log(2.0), 1e-12);
}

TEST(Loss, MatchesHighPrecisionReference) {
  Rng rng(5);
  TrainConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    const auto mode = trial % 2 ? WeightMode::PerAugmentation : WeightMode::PerAugmentationClass;
    const std::size_t n = 1 + rng.below(10), m = 1 + rng.below(5), c = 2 + rng.below(4);
    const ParamShape shape{mode, m, c};
    const auto p = fixtures::random_probs(n, m, c, rng);
    const auto y = fixtures::random_labels(n, c, rng);
    const auto theta = fixtures::random_theta(shape.size(), rng);
    const double got = loss(shape, theta, p, y, cfg);
    EXPECT_NEAR(got, static_cast<double>(reference_loss(shape, theta, p, y, cfg)), 1e-10);
  }
}

TEST(Loss, BatchSubset) {
  Rng rng(6);
  const auto p = fixtures::random_probs(6, 2, 3, rng);
  const auto y = fixtures::random_labels(6, 3, rng);
  const ParamShape shape{WeightMode::PerAugmentation, 2, 3};
  const std::vector<double> theta{0.3, 0.7};
  TrainConfig cfg;
  const std::vector<std::size_t> batch{1, 4};
  const auto sub = select_rows(p, batch);
  const auto sub_y = select_rows(y, batch);
  EXPECT_NEAR(loss(shape, theta, p, y, cfg, batch), loss(shape, theta, sub, sub_y, cfg), 1e-14);
}

TEST(Loss, Errors) {
  Rng rng(7);
  const auto p = fixtures::random_probs(4, 2, 3, rng);
  const auto y = fixtures::random_labels(4, 3, rng);
  const LabeledSet short_y({0, 1}, 3);
  TrainConfig cfg;
  const std::vector<double> theta{0.5, 0.5};
  EXPECT_EQ(code_of([&] { loss({WeightMode::PerAugmentation, 2, 3}, theta, p, short_y, cfg); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { loss({WeightMode::PerAugmentationClass, 2, 3}, theta, p, y, cfg); }),
            ErrorCode::DimensionMismatch);
  const PredictionTensor negative(1, 1, 2, ScoreKind::Logits, to_floats({-1, 2}));
  EXPECT_EQ(code_of([&] { loss({WeightMode::PerAugmentation, 1, 2}, std::vector<double>{1.0}, negative,
                               LabeledSet({0}, 2), cfg); }),
            ErrorCode::InvalidArgument);
}

TEST(Gradient, IdenticalSlicesGiveEqualRows) {
  Rng rng(8);
  const auto p = tie_slices(fixtures::random_probs(10, 4, 3, rng));
  const auto y = fixtures::random_labels(10, 3, rng);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  const std::vector<double> theta(12, 0.25);
  const auto g = gradient({WeightMode::PerAugmentationClass, 4, 3}, theta, p, y, cfg);
  for (std::size_t a = 1; a < 4; ++a)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(g[a * 3 + k], g[k], 1e-15);
}

TEST(Gradient, ZeroScoresLeaveOnlyWeightDecay) {
  const PredictionTensor zeros(3, 2, 2, ScoreKind::Logits, std::vector<float>(12, 0.0f));
  const LabeledSet y({0, 1, 1}, 2);
  TrainConfig cfg;
  cfg.weight_decay = 0.01;
  const std::vector<double> theta{0.1, 0.2, 0.3, 0.4};
  const auto g = gradient({WeightMode::PerAugmentationClass, 2, 2}, theta, zeros, y, cfg);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(g[k], cfg.weight_decay * theta[k], 1e-18);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(9);
  TrainConfig cfg;
  for (int trial = 0; trial < 40; ++trial) {
    const auto mode = trial % 2 ? WeightMode::PerAugmentation : WeightMode::PerAugmentationClass;
    const std::size_t n = 1 + rng.below(12), m = 1 + rng.below(5), c = 2 + rng.below(4);
    const ParamShape shape{mode, m, c};
    const auto p = fixtures::random_probs(n, m, c, rng);
    const auto y = fixtures::random_labels(n, c, rng);
    const auto theta = fixtures::random_theta(shape.size(), rng);
    const auto analytic = gradient(shape, theta, p, y, cfg);
    const auto numeric = finite_difference(shape, theta, p, y, cfg);
    EXPECT_LE(relative_error(analytic, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.learning_rate, 0.01);
  EXPECT_EQ(cfg.momentum, 0.9);
  EXPECT_EQ(cfg.weight_decay, 1e-4);
  EXPECT_EQ(cfg.epochs, 30u);
  cfg.epochs = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
  cfg = TrainConfig{};
  cfg.learning_rate = 0.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidArgument);
}

TEST(Train, OneEpochStaysNonnegative) {
  Rng rng(10);
  for (auto mode : {WeightMode::PerAugmentation, WeightMode::PerAugmentationClass}) {
    const auto p = fixtures::random_probs(300, 4, 3, rng);
    const auto y = fixtures::random_labels(300, 3, rng);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 5.0;  // large steps push weights into the boundary
    double lowest = INFINITY;
    const auto r = train(p, y, p, y, mode, cfg, [&](const TrainStep& s) { lowest = std::min(lowest, s.min_weight); });
    EXPECT_GE(lowest, 0.0);
    for (float w : r.aggregator.weights().values()) EXPECT_GE(w, 0.0f);
    EXPECT_EQ(r.steps, 2u);
    EXPECT_EQ(r.val_accuracy.size(), 2u);
  }
}

TEST(Train, Errors) {
  Rng rng(11);
  const auto p = fixtures::random_probs(10, 2, 3, rng);
  const auto y = fixtures::random_labels(10, 3, rng);
  const auto p4 = fixtures::random_probs(10, 2, 4, rng);
  const auto y4 = fixtures::random_labels(10, 4, rng);
  TrainConfig cfg;
  EXPECT_EQ(code_of([&] { train(p, y4, p, y, WeightMode::PerAugmentation, cfg); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { train(p, y, p4, y4, WeightMode::PerAugmentation, cfg); }), ErrorCode::DimensionMismatch);
  cfg.epochs = 0;
  EXPECT_EQ(code_of([&] { train(p, y, p, y, WeightMode::PerAugmentation, cfg); }), ErrorCode::InvalidArgument);
}

TEST(Train, DeterministicPerSeed) {
  Rng rng(12);
  const auto p = fixtures::random_probs(400, 3, 3, rng);
  const auto y = fixtures::random_labels(400, 3, rng);
  TrainConfig cfg;
  cfg.epochs = 5;
  const auto a = train(p, y, p, y, WeightMode::PerAugmentationClass, cfg);
  const auto b = train(p, y, p, y, WeightMode::PerAugmentationClass, cfg);
  EXPECT_EQ(a.aggregator.weights(), b.aggregator.weights());
  EXPECT_EQ(a.val_accuracy, b.val_accuracy);
}

TEST(Train, EpochZeroIsTheMeanBaseline) {
  Rng rng(13);
  const auto p = fixtures::random_probs(500, 4, 3, rng);
  const auto y = fixtures::random_labels(500, 3, rng);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto r = train(p, y, p, y, WeightMode::PerAugmentation, cfg);
  EXPECT_EQ(r.val_accuracy[0], accuracy_of(Aggregator::mean(4, 3), p, y));
  EXPECT_GE(r.val_accuracy[r.best_epoch], r.val_accuracy[0]);
}

TEST(Train, InvariantWorldAugMatchesRaw) {
  for (std::uint64_t seed : {5, 32, 35}) {
    const auto world = invariant_world(random_world(3, 4, seed));
    const auto train_set = emit(world, 1000);
    const auto test_set = emit(reseeded(world, 99), 1000);
    const auto r = train(train_set.preds, train_set.labels, train_set.preds, train_set.labels,
                         WeightMode::PerAugmentation, TrainConfig{});
    EXPECT_EQ(predict(r.aggregator, test_set.preds), predict(Aggregator::raw(4, 3), test_set.preds)) << seed;
  }
}

// With identical slices ClassTTA reduces to raw scores scaled by per-class column sums,
// so it can move predictions whenever those sums differ.
TEST(Train, InvariantWorldClassIsColumnReweightedRaw) {
  for (std::uint64_t seed : {5, 32, 35}) {
    const auto world = invariant_world(random_world(3, 4, seed));
    const auto train_set = emit(world, 1000);
    const auto test_set = emit(reseeded(world, 99), 1000);
    const auto r = train(train_set.preds, train_set.labels, train_set.preds, train_set.labels,
                         WeightMode::PerAugmentationClass, TrainConfig{});
    std::vector<double> colsum(3, 0.0);
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t c = 0; c < 3; ++c) colsum[c] += r.aggregator.weights().weight(a, c);
    const auto got = predict(r.aggregator, test_set.preds);
    for (std::size_t i = 0; i < test_set.preds.n(); ++i) {
      std::vector<double> g(3);
      for (std::size_t c = 0; c < 3; ++c) g[c] = colsum[c] * test_set.preds.at(i, 0, c);
      EXPECT_EQ(got[i], argmax_class(g)) << seed << " input " << i;
    }
  }
}

TEST(Train, PlantedClassWeightsBeatMeanOnValidation) {
  const auto world = planted_class_asymmetry(3);
  const auto tr = emit(world, 5000);
  const auto val = emit(reseeded(world, 4), 1000);
  const auto r = train(tr.preds, tr.labels, val.preds, val.labels, WeightMode::PerAugmentationClass, TrainConfig{});
  EXPECT_GE(r.val_accuracy[r.best_epoch], accuracy_of(Aggregator::mean(2, 2), val.preds, val.labels));
}

TEST(SelectMode, AccuracyThenTieRule) {
  // Slice 0 is right on inputs 0 and 1, slice 1 only on input 1.
  const PredictionTensor val(2, 2, 2, ScoreKind::Probabilities, to_floats({0.9, 0.1, 0.2, 0.8, 0.1, 0.9, 0.3, 0.7}));
  const LabeledSet y({0, 1}, 2);
  const auto raw_like = Aggregator::learned(AggregationWeights(WeightMode::PerAugmentation, 2, 2, {1.0f, 0.0f}));
  const auto bad = Aggregator::learned(AggregationWeights(WeightMode::PerAugmentation, 2, 2, {0.0f, 1.0f}));
  const auto cls_good =
      Aggregator::learned(AggregationWeights(WeightMode::PerAugmentationClass, 2, 2, {1.0f, 1.0f, 0.0f, 0.0f}));
  const auto cls_bad =
      Aggregator::learned(AggregationWeights(WeightMode::PerAugmentationClass, 2, 2, {0.0f, 0.0f, 1.0f, 1.0f}));
  EXPECT_EQ(select_mode(cls_good, bad, val, y).weights().mode(), WeightMode::PerAugmentationClass);
  EXPECT_EQ(select_mode(cls_bad, raw_like, val, y).weights().mode(), WeightMode::PerAugmentation);
  EXPECT_EQ(select_mode(cls_good, raw_like, val, y).weights().mode(), WeightMode::PerAugmentation);
}

TEST(SelectMode, ValidationDecidesEvenWhenTestDisagrees) {
  const auto world = planted_class_asymmetry(21);
  const auto tr = emit(world, 4000);
  const auto pool = emit(reseeded(world, 22), 4000);
  TrainConfig cfg;
  const auto cls = train(tr.preds, tr.labels, tr.preds, tr.labels, WeightMode::PerAugmentationClass, cfg).aggregator;
  const auto aug = train(tr.preds, tr.labels, tr.preds, tr.labels, WeightMode::PerAugmentation, cfg).aggregator;
  const auto pc = predict(cls, pool.preds);
  const auto pa = predict(aug, pool.preds);
  std::vector<std::size_t> aug_wins, cls_wins;
  for (std::size_t i = 0; i < pool.labels.size(); ++i) {
    if (pa[i] == pool.labels[i] && pc[i] != pool.labels[i]) aug_wins.push_back(i);
    if (pc[i] == pool.labels[i] && pa[i] != pool.labels[i]) cls_wins.push_back(i);
  }
  ASSERT_FALSE(aug_wins.empty());
  ASSERT_FALSE(cls_wins.empty());
  const auto val_p = select_rows(pool.preds, aug_wins);
  const auto val_y = select_rows(pool.labels, aug_wins);
  const auto test_p = select_rows(pool.preds, cls_wins);
  const auto test_y = select_rows(pool.labels, cls_wins);
  const auto chosen = select_mode(cls, aug, val_p, val_y);
  EXPECT_EQ(chosen.weights().mode(), WeightMode::PerAugmentation);
  EXPECT_GT(accuracy_of(cls, test_p, test_y), accuracy_of(chosen, test_p, test_y));
}

TEST(BaselineMean, Examples) {
  Rng rng(14);
  const auto one = fixtures::random_logits(5, 1, 3, rng);
  EXPECT_EQ(baseline_mean(one).values, baseline_raw(one).values);
  const PredictionTensor two(1, 2, 2, ScoreKind::Logits, to_floats({2, 0, 0, 2}));
  EXPECT_EQ(baseline_mean(two).values, (std::vector<double>{1.0, 1.0}));
}

TEST(BaselineMean, RowMeanOracle) {
  Rng rng(15);
  const auto t = fixtures::random_logits(20, 5, 4, rng);
  const auto s = baseline_mean(t);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double sum = 0.0;
      for (std::size_t a = 0; a < 5; ++a) sum += t.at(i, a, k);
      EXPECT_NEAR(s.row(i)[k], sum / 5.0, 1e-12);
    }
}

TEST(BaselineRaw, SliceZeroAndManifestLookup) {
  Rng rng(16);
  const auto t = fixtures::random_logits(6, 3, 4, rng);
  const auto s = baseline_raw(t);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(s.row(i)[k], t.at(i, 0, k));

  // Views stored in a shuffled order; the manifest says where the identity went.
  const std::vector<AugmentationSpec> specs{{"hflip", {}}, {"vflip", {}}, {"identity", {}}};
  const auto idx = find_identity_index(specs);
  ASSERT_EQ(idx, 2u);
  const auto moved = baseline_raw(t, idx);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(moved.row(i)[k], t.at(i, 2, k));
  EXPECT_EQ(code_of([&] { baseline_raw(t, 3); }), ErrorCode::DimensionMismatch);
}

TEST(Gps, SingleAugmentation) {
  Rng rng(17);
  const auto t = fixtures::random_logits(20, 1, 3, rng);
  const auto y = fixtures::random_labels(20, 3, rng);
  const auto g = gps_search(t, y);
  EXPECT_EQ(std::vector<std::size_t>(g.gps_selection().begin(), g.gps_selection().end()),
            (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(code_of([&] { gps_search(t, y, 0); }), ErrorCode::EmptySelectionPool);
  EXPECT_EQ(code_of([&] { Aggregator::gps({0, 3}, 1, 3); }), ErrorCode::DimensionMismatch);
}

TEST(Gps, DominantAugmentationPickedFirst) {
  SyntheticWorld w = random_world(3, 4, 18, 0.3, 0.6);
  for (std::size_t k = 0; k < 3; ++k) w.correct_prob[2 * 3 + k] = 0.97;
  const auto data = emit(w, 2000);
  const auto g = gps_search(data.preds, data.labels);
  EXPECT_EQ(g.gps_selection()[0], 2u);
  EXPECT_EQ(g.gps_selection().size(), 3u);
}

TEST(Gps, SizeOneIsTheBestSingleView) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto w = random_world(4, 5, seed);
    const auto data = emit(w, 300);
    double best = -1.0;
    std::size_t best_aug = 0;
    for (std::size_t a = 0; a < 5; ++a) {
      const double acc = accuracy_of(Aggregator::gps({a}, 5, 4), data.preds, data.labels);
      if (acc > best) best = acc, best_aug = a;
    }
    const auto g = gps_search(data.preds, data.labels, 1);
    EXPECT_EQ(g.gps_selection()[0], best_aug);
  }
}

TEST(Gps, ScoresAreTheSelectionMean) {
  Rng rng(19);
  const auto t = fixtures::random_logits(4, 3, 2, rng);
  const auto s = Aggregator::gps({2, 0, 2}, 3, 2).scores(t);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_NEAR(s.row(i)[k], (2.0 * t.at(i, 2, k) + t.at(i, 0, k)) / 3.0, 1e-12);
}

TEST(Predict, RawIsSliceZeroArgmax) {
  Rng rng(20);
  const auto t = fixtures::random_logits(50, 4, 5, rng);
  const auto pred = predict(Aggregator::raw(4, 5), t);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(pred[i], argmax_class(t.row(i, 0)));
}

TEST(Predict, UniformLearnedEqualsMeanOfProbabilities) {
  Rng rng(21);
  for (auto mode : {WeightMode::PerAugmentation, WeightMode::PerAugmentationClass}) {
    const auto t = fixtures::random_logits(200, 4, 3, rng);
    const std::vector<float> uniform(AggregationWeights::parameter_count(mode, 4, 3), 0.25f);
    const auto learned = predict(Aggregator::learned(AggregationWeights(mode, 4, 3, uniform)), t);
    const auto mean = predict(Aggregator::mean(4, 3), to_probabilities(t));
    EXPECT_EQ(learned, mean);
  }
}

TEST(Predict, HandComposedPipeline) {
  Rng rng(22);
  const auto t = fixtures::random_logits(30, 3, 4, rng);
  const auto theta = fixtures::random_theta(12, rng);
  std::vector<float> w(theta.begin(), theta.end());
  const auto agg = Aggregator::learned(AggregationWeights(WeightMode::PerAugmentationClass, 3, 4, w));
  const auto pred = predict(agg, t);
  for (std::size_t i = 0; i < 30; ++i) {
    std::vector<double> g(4, 0.0);
    for (std::size_t a = 0; a < 3; ++a) {
      std::vector<double> row(t.row(i, a).begin(), t.row(i, a).end());
      const auto p = softmax(row);
      for (std::size_t k = 0; k < 4; ++k) g[k] += static_cast<double>(w[a * 4 + k]) * static_cast<float>(p[k]);
    }
    EXPECT_EQ(pred[i], argmax_class(g));
  }
  EXPECT_EQ(code_of([&] { predict(agg, fixtures::random_logits(3, 2, 4, rng)); }), ErrorCode::DimensionMismatch);
}

TEST(Invariance, IdenticalSlicesMakeEveryMethodAgree) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng.below(5), c = 2 + rng.below(4);
    const auto t = tie_slices(fixtures::random_probs(40, m, c, rng));
    const auto y = fixtures::random_labels(40, c, rng);
    const auto raw = predict(Aggregator::raw(m, c), t);
    EXPECT_EQ(predict(Aggregator::mean(m, c), t), raw);
    EXPECT_EQ(predict(gps_search(t, y), t), raw);

    auto aug_theta = fixtures::random_theta(m, rng);
    EXPECT_EQ(predict(Aggregator::learned(AggregationWeights(WeightMode::PerAugmentation, m, c,
                                                             {aug_theta.begin(), aug_theta.end()})),
                      t),
              raw);

    // Class weights whose per-class column sums are equal.
    std::vector<float> cls(m * c, 0.0f);
    for (std::size_t k = 0; k < c; ++k) cls[rng.below(m) * c + k] = 0.7f;
    EXPECT_EQ(predict(Aggregator::learned(AggregationWeights(WeightMode::PerAugmentationClass, m, c, cls)), t), raw);
  }
}

#include "tta/aggregate.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tta/rng.hpp"

namespace tta {
namespace {

void check_pair(const PredictionTensor& preds, const LabeledSet& labels) {
  require(preds.n() == labels.size(), ErrorCode::DimensionMismatch,
          "tensor has " + std::to_string(preds.n()) + " inputs but " + std::to_string(labels.size()) + " labels");
  require(preds.c() == labels.c(), ErrorCode::DimensionMismatch, "tensor and labels disagree on class count");
}

std::size_t count_correct(std::span<const ClassIndex> predicted, std::span<const ClassIndex> truth) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return hits;
}

std::vector<double> widen(std::span<const float> values) { return {values.begin(), values.end()}; }

AggregationWeights narrow(const ParamShape& shape, std::span<const double> theta) {
  std::vector<float> values(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) values[k] = static_cast<float>(theta[k]);
  return AggregationWeights(shape.mode, shape.m, shape.c, std::move(values));
}

// Cross-entropy of the normalized aggregate plus the L2 penalty; fills `grad` when given.
double objective(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
                 const LabeledSet& labels, const TrainConfig& cfg, std::span<const std::size_t> batch,
                 std::vector<double>* grad) {
  check_pair(probs, labels);
  require(probs.m() == shape.m && probs.c() == shape.c && theta.size() == shape.size(), ErrorCode::DimensionMismatch,
          "parameters do not match the tensor's augmentation/class counts");

  const std::size_t count = batch.empty() ? probs.n() : batch.size();
  require(count > 0, ErrorCode::EmptyTrainingSet, "empty batch");
  const double inv_count = 1.0 / static_cast<double>(count);
  const std::size_t c = shape.c;
  const double floor_mass = static_cast<double>(c) * cfg.epsilon;

  if (grad) grad->assign(theta.size(), 0.0);
  std::vector<double> dg(c);
  double total = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t i = batch.empty() ? b : batch[b];
    const auto block = probs.block(i);
    if (probs.kind() == ScoreKind::Logits) {
      for (float v : block) require(v >= 0.0f, ErrorCode::InvalidArgument, "the learned objective needs nonnegative scores");
    }
    const ScoreVector g = forward(shape, theta, block);
    const ClassIndex y = labels[i];
    const double mass = std::accumulate(g.begin(), g.end(), 0.0) + floor_mass;
    total += std::log(mass) - std::log(g[y] + cfg.epsilon);
    if (!grad) continue;

    for (std::size_t k = 0; k < c; ++k) dg[k] = inv_count / mass;
    dg[y] -= inv_count / (g[y] + cfg.epsilon);
    for (std::size_t a = 0; a < shape.m; ++a) {
      for (std::size_t k = 0; k < c; ++k) {
        const double contribution = dg[k] * block[a * c + k];
        if (shape.mode == WeightMode::PerAugmentation) {
          (*grad)[a] += contribution;
        } else {
          (*grad)[a * c + k] += contribution;
        }
      }
    }
  }

  double sq = 0.0;
  for (double t : theta) sq += t * t;
  if (grad) {
    for (std::size_t k = 0; k < theta.size(); ++k) (*grad)[k] += cfg.weight_decay * theta[k];
  }
  return total * inv_count + 0.5 * cfg.weight_decay * sq;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning_rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, ErrorCode::InvalidArgument, "weight_decay must be nonnegative");
  require(epochs >= 1, ErrorCode::InvalidArgument, "epochs must be >= 1");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be >= 1");
  require(epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
}

Aggregator Aggregator::raw(std::size_t m, std::size_t c) { return Aggregator(AggregationMethod::Raw, m, c); }

Aggregator Aggregator::mean(std::size_t m, std::size_t c) { return Aggregator(AggregationMethod::Mean, m, c); }

Aggregator Aggregator::gps(std::vector<std::size_t> selected, std::size_t m, std::size_t c) {
  require(!selected.empty(), ErrorCode::EmptySelectionPool, "GPS needs at least one selection");
  for (std::size_t s : selected) {
    require(s < m, ErrorCode::DimensionMismatch, "GPS selection " + std::to_string(s) + " is not an augmentation index");
  }
  Aggregator agg(AggregationMethod::Gps, m, c);
  agg.selected_ = std::move(selected);
  return agg;
}

Aggregator Aggregator::learned(AggregationWeights weights) {
  Aggregator agg(AggregationMethod::Learned, weights.m(), weights.c());
  agg.weights_ = std::move(weights);
  return agg;
}

const AggregationWeights& Aggregator::weights() const {
  require(weights_.has_value(), ErrorCode::InvalidArgument, "aggregator has no learned weights");
  return *weights_;
}

ScoreMatrix Aggregator::scores(const PredictionTensor& preds) const {
  require(preds.m() == m_ && preds.c() == c_, ErrorCode::DimensionMismatch,
          "aggregator expects M=" + std::to_string(m_) + ", C=" + std::to_string(c_) + " but tensor has M=" +
              std::to_string(preds.m()) + ", C=" + std::to_string(preds.c()));
  switch (method_) {
    case AggregationMethod::Raw:
      return baseline_raw(preds);
    case AggregationMethod::Mean:
      return baseline_mean(preds);
    case AggregationMethod::Gps: {
      ScoreMatrix out{preds.n(), c_, std::vector<double>(preds.n() * c_, 0.0)};
      const double k = static_cast<double>(selected_.size());
      for (std::size_t i = 0; i < preds.n(); ++i) {
        for (std::size_t s : selected_) {
          const auto row = preds.row(i, s);
          for (std::size_t cls = 0; cls < c_; ++cls) out.values[i * c_ + cls] += row[cls];
        }
        for (std::size_t cls = 0; cls < c_; ++cls) out.values[i * c_ + cls] /= k;
      }
      return out;
    }
    case AggregationMethod::Learned: {
      const PredictionTensor probs = to_probabilities(preds);
      const ParamShape shape{weights_->mode(), m_, c_};
      const auto theta = widen(weights_->values());
      ScoreMatrix out{preds.n(), c_, {}};
      out.values.reserve(preds.n() * c_);
      for (std::size_t i = 0; i < preds.n(); ++i) {
        const auto g = forward(shape, theta, probs.block(i));
        out.values.insert(out.values.end(), g.begin(), g.end());
      }
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown aggregation method");
}

ScoreVector forward_class(std::span<const double> theta, std::span<const float> preds, std::size_t m,
                          std::size_t c) {
  require(theta.size() == m * c && preds.size() == m * c, ErrorCode::DimensionMismatch,
          "ClassTTA expects M x C weights and predictions");
  ScoreVector out(c, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t k = 0; k < c; ++k) out[k] += theta[a * c + k] * preds[a * c + k];
  return out;
}

ScoreVector forward_aug(std::span<const double> theta, std::span<const float> preds, std::size_t m,
                        std::size_t c) {
  require(theta.size() == m && preds.size() == m * c, ErrorCode::DimensionMismatch,
          "AugTTA expects M weights and M x C predictions");
  ScoreVector out(c, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t k = 0; k < c; ++k) out[k] += theta[a] * preds[a * c + k];
  return out;
}

ScoreVector forward(const ParamShape& shape, std::span<const double> theta, std::span<const float> preds) {
  return shape.mode == WeightMode::PerAugmentation ? forward_aug(theta, preds, shape.m, shape.c)
                                                   : forward_class(theta, preds, shape.m, shape.c);
}

double loss(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
            const LabeledSet& labels, const TrainConfig& cfg, std::span<const std::size_t> batch) {
  return objective(shape, theta, probs, labels, cfg, batch, nullptr);
}

std::vector<double> gradient(const ParamShape& shape, std::span<const double> theta, const PredictionTensor& probs,
                             const LabeledSet& labels, const TrainConfig& cfg, std::span<const std::size_t> batch) {
  std::vector<double> grad;
  objective(shape, theta, probs, labels, cfg, batch, &grad);
  return grad;
}

TrainResult train(const PredictionTensor& train_preds, const LabeledSet& train_labels,
                  const PredictionTensor& val_preds, const LabeledSet& val_labels, WeightMode mode,
                  const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  check_pair(train_preds, train_labels);
  check_pair(val_preds, val_labels);
  require(train_preds.n() > 0, ErrorCode::EmptyTrainingSet, "no training inputs");
  require(val_preds.m() == train_preds.m() && val_preds.c() == train_preds.c(), ErrorCode::DimensionMismatch,
          "training and validation tensors disagree on M or C");

  const PredictionTensor train_probs = to_probabilities(train_preds);
  const PredictionTensor val_probs = to_probabilities(val_preds);
  const ParamShape shape{mode, train_preds.m(), train_preds.c()};
  const std::size_t n = train_probs.n();

  std::vector<double> theta(shape.size(), 1.0 / static_cast<double>(shape.m));
  std::vector<double> velocity(shape.size(), 0.0);

  auto checkpoint = Aggregator::learned(narrow(shape, theta));
  std::vector<double> history{accuracy_of(checkpoint, val_probs, val_labels)};
  double best_accuracy = history.front();
  std::size_t best_epoch = 0;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::span<const std::size_t> batch(order.data() + start, std::min(cfg.batch_size, n - start));
      std::vector<double> grad;
      const double batch_loss = objective(shape, theta, train_probs, train_labels, cfg, batch, &grad);

      double min_weight = INFINITY;
      for (std::size_t k = 0; k < theta.size(); ++k) {
        velocity[k] = cfg.momentum * velocity[k] + grad[k];
        theta[k] = std::max(theta[k] - cfg.learning_rate * velocity[k], 0.0);
        min_weight = std::min(min_weight, theta[k]);
      }
      ++step;
      require(min_weight >= 0.0, ErrorCode::ProjectionViolation,
              "negative weight after projection at step " + std::to_string(step));
      if (observer) observer(TrainStep{epoch, step, batch_loss, min_weight});
    }

    auto candidate = Aggregator::learned(narrow(shape, theta));
    const double acc = accuracy_of(candidate, val_probs, val_labels);
    history.push_back(acc);
    if (acc > best_accuracy) {
      best_accuracy = acc;
      best_epoch = epoch;
      checkpoint = std::move(candidate);
    }
  }
  return TrainResult{std::move(checkpoint), std::move(history), best_epoch, step};
}

Aggregator select_mode(const Aggregator& class_agg, const Aggregator& aug_agg, const PredictionTensor& val_preds,
                       const LabeledSet& val_labels) {
  require(class_agg.m() == aug_agg.m() && class_agg.c() == aug_agg.c(), ErrorCode::DimensionMismatch,
          "aggregators were trained on different policies or class sets");
  const double class_acc = accuracy_of(class_agg, val_preds, val_labels);
  const double aug_acc = accuracy_of(aug_agg, val_preds, val_labels);
  return class_acc > aug_acc ? class_agg : aug_agg;
}

ScoreMatrix baseline_mean(const PredictionTensor& preds) {
  const std::size_t c = preds.c();
  ScoreMatrix out{preds.n(), c, std::vector<double>(preds.n() * c, 0.0)};
  const double m = static_cast<double>(preds.m());
  for (std::size_t i = 0; i < preds.n(); ++i) {
    for (std::size_t a = 0; a < preds.m(); ++a) {
      const auto row = preds.row(i, a);
      for (std::size_t k = 0; k < c; ++k) out.values[i * c + k] += row[k];
    }
    for (std::size_t k = 0; k < c; ++k) out.values[i * c + k] /= m;
  }
  return out;
}

ScoreMatrix baseline_raw(const PredictionTensor& preds, std::size_t identity_index) {
  require(identity_index < preds.m(), ErrorCode::DimensionMismatch, "identity index outside the tensor");
  ScoreMatrix out{preds.n(), preds.c(), {}};
  out.values.reserve(preds.n() * preds.c());
  for (std::size_t i = 0; i < preds.n(); ++i) {
    const auto row = preds.row(i, identity_index);
    out.values.insert(out.values.end(), row.begin(), row.end());
  }
  return out;
}

Aggregator gps_search(const PredictionTensor& preds, const LabeledSet& labels, std::size_t size) {
  check_pair(preds, labels);
  require(size >= 1, ErrorCode::EmptySelectionPool, "GPS size must be >= 1");
  const std::size_t n = preds.n();
  const std::size_t c = preds.c();

  std::vector<double> running(n * c, 0.0);
  std::vector<double> candidate(c);
  std::vector<std::size_t> selected;
  for (std::size_t round = 0; round < size; ++round) {
    const double k = static_cast<double>(round + 1);
    std::size_t best_aug = 0;
    std::size_t best_hits = 0;
    for (std::size_t a = 0; a < preds.m(); ++a) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = preds.row(i, a);
        for (std::size_t cls = 0; cls < c; ++cls) candidate[cls] = (running[i * c + cls] + row[cls]) / k;
        hits += argmax_class(candidate) == labels[i];
      }
      if (a == 0 || hits > best_hits) {
        best_hits = hits;
        best_aug = a;
      }
    }
    selected.push_back(best_aug);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = preds.row(i, best_aug);
      for (std::size_t cls = 0; cls < c; ++cls) running[i * c + cls] += row[cls];
    }
  }
  return Aggregator::gps(std::move(selected), preds.m(), c);
}

std::vector<ClassIndex> argmax_rows(const ScoreMatrix& scores) {
  std::vector<ClassIndex> out(scores.n);
  for (std::size_t i = 0; i < scores.n; ++i) out[i] = static_cast<ClassIndex>(argmax_class(scores.row(i)));
  return out;
}

std::vector<ClassIndex> predict(const Aggregator& agg, const PredictionTensor& preds) {
  return argmax_rows(agg.scores(preds));
}

double accuracy_of(const Aggregator& agg, const PredictionTensor& preds, const LabeledSet& labels) {
  check_pair(preds, labels);
  const auto predicted = predict(agg, preds);
  return static_cast<double>(count_correct(predicted, labels.labels())) / static_cast<double>(labels.size());
}

}  // namespace tta

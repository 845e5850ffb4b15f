#include "tta/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tta/aggregate.hpp"
#include "tta/io.hpp"
#include "tta/metrics.hpp"
#include "tta/rng.hpp"

namespace tta {
namespace {

std::uint32_t big_endian_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t k = 0; k < 4; ++k) v = (v << 8) | static_cast<unsigned char>(bytes[offset + k]);
  return v;
}

}  // namespace

void SyntheticWorld::validate() const {
  require(c >= 2 && m >= 1, ErrorCode::InvariantViolation, "world needs c >= 2, m >= 1");
  require(correct_prob.size() == m * c && confusion_target.size() == m * c, ErrorCode::DimensionMismatch,
          "world matrices must be M x C");
  require(concentration > 0.0, ErrorCode::InvalidArgument, "concentration must be positive");
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t k = 0; k < c; ++k) {
      const double p = correct(a, k);
      require(p >= 0.0 && p <= 1.0, ErrorCode::InvariantViolation, "correct_prob outside [0, 1]");
      require(confusion(a, k) < c && confusion(a, k) != k, ErrorCode::InvariantViolation,
              "confusion target must be another valid class");
    }
  }
}

LabeledTensor emit(const SyntheticWorld& world, std::size_t n) {
  world.validate();
  require(n >= 1, ErrorCode::InvalidArgument, "emit needs n >= 1");
  const std::size_t c = world.c;
  const std::size_t m = world.m;
  Rng rng(world.seed);
  std::vector<ClassIndex> labels(n);
  std::vector<float> values(n * m * c);
  std::vector<double> rest(c);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<ClassIndex>(rng.below(c));
    labels[i] = y;
    for (std::size_t a = 0; a < m; ++a) {
      float* row = values.data() + (i * m + a) * c;
      if (world.tied_slices && a > 0) {
        std::copy(row - a * c, row - a * c + c, row);
        continue;
      }
      const ClassIndex target = rng.uniform() < world.correct(a, y) ? y : world.confusion(a, y);
      const double peak = 0.5 + 0.5 * std::pow(1.0 - rng.uniform(), 1.0 / world.concentration);
      double rest_sum = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        rest[k] = k == target ? 0.0 : rng.exponential();
        rest_sum += rest[k];
      }
      for (std::size_t k = 0; k < c; ++k) {
        row[k] = static_cast<float>(k == target ? peak : (1.0 - peak) * rest[k] / rest_sum);
      }
    }
  }
  return {PredictionTensor(n, m, c, ScoreKind::Probabilities, std::move(values)), LabeledSet(std::move(labels), c)};
}

SyntheticWorld invariant_world(const SyntheticWorld& base) {
  SyntheticWorld world = base;
  world.tied_slices = true;
  return world;
}

SyntheticWorld planted_class_asymmetry(std::uint64_t seed) {
  SyntheticWorld world;
  world.c = 2;
  world.m = 2;
  world.correct_prob = {0.80, 0.80,   // identity
                        0.50, 0.99};  // augmentation 1
  world.confusion_target = {1, 0, 1, 0};
  world.concentration = 4.0;
  world.seed = seed;
  return world;
}

SyntheticWorld random_world(std::size_t c, std::size_t m, std::uint64_t seed, double low, double high) {
  require(c >= 2 && m >= 1, ErrorCode::InvalidArgument, "random world needs c >= 2, m >= 1");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  SyntheticWorld world;
  world.c = c;
  world.m = m;
  world.seed = seed;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t k = 0; k < c; ++k) {
      world.correct_prob.push_back(low + (high - low) * rng.uniform());
      world.confusion_target.push_back(static_cast<ClassIndex>((k + 1 + rng.below(c - 1)) % c));
    }
  }
  return world;
}

SyntheticWorld reseeded(SyntheticWorld world, std::uint64_t seed) {
  world.seed = seed;
  return world;
}

AggregationWeights bayes_weights(const SyntheticWorld& world) {
  world.validate();
  constexpr double kFloor = 1e-6;
  std::vector<float> theta(world.m * world.c);
  for (std::size_t a = 0; a < world.m; ++a) {
    for (std::size_t k = 0; k < world.c; ++k) {
      double false_vote = 0.0;
      for (std::size_t other = 0; other < world.c; ++other) {
        if (other != k && world.confusion(a, other) == k) false_vote += 1.0 - world.correct(a, other);
      }
      false_vote /= static_cast<double>(world.c - 1);
      const double ratio = std::max(world.correct(a, k), kFloor) / std::max(false_vote, kFloor);
      theta[a * world.c + k] = static_cast<float>(std::max(0.0, std::log(ratio)));
    }
  }
  return AggregationWeights(WeightMode::PerAugmentationClass, world.m, world.c, std::move(theta));
}

ScoreVector ToyClassifier::logits(const Image& img) const {
  const auto px = img.pixels();
  require(px.size() == inputs, ErrorCode::DimensionMismatch, "image size does not match the classifier");
  ScoreVector out(bias);
  for (std::size_t p = 0; p < inputs; ++p) {
    const double x = px[p] / 255.0;
    if (x == 0.0) continue;
    for (std::size_t k = 0; k < classes; ++k) out[k] += weights[p * classes + k] * x;
  }
  return out;
}

ToyClassifier train_toy(std::span<const Image> images, const LabeledSet& labels, double train_fraction,
                        const ToyConfig& cfg) {
  require(images.size() == labels.size(), ErrorCode::LengthMismatch, "one label per image required");
  require(train_fraction > 0.0 && train_fraction <= 1.0, ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(images.size())));
  require(count >= 1, ErrorCode::EmptyTrainingSet, "training fraction selects no images");
  const std::size_t inputs = images.front().pixels().size();
  for (const auto& img : images) {
    require(img.pixels().size() == inputs, ErrorCode::DimensionMismatch, "images must share dimensions");
  }

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick(cfg.seed);
  pick.shuffle(std::span<std::size_t>(order));
  order.resize(count);

  const std::size_t classes = labels.c();
  ToyClassifier clf{inputs, classes, std::vector<double>(inputs * classes), std::vector<double>(classes, 0.0)};
  Rng init(cfg.seed ^ 0x5bd1e995ULL);
  for (double& w : clf.weights) w = 0.01 * init.normal();

  std::vector<double> x(count * inputs);
  for (std::size_t r = 0; r < count; ++r) {
    const auto px = images[order[r]].pixels();
    for (std::size_t p = 0; p < inputs; ++p) x[r * inputs + p] = px[p] / 255.0;
  }

  const double inv = 1.0 / static_cast<double>(count);
  std::vector<double> grad_w(inputs * classes);
  std::vector<double> grad_b(classes);
  std::vector<double> z(classes);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t r = 0; r < count; ++r) {
      const double* row = x.data() + r * inputs;
      z = clf.bias;
      for (std::size_t p = 0; p < inputs; ++p)
        for (std::size_t k = 0; k < classes; ++k) z[k] += clf.weights[p * classes + k] * row[p];
      auto prob = softmax(z);
      prob[labels[order[r]]] -= 1.0;
      for (std::size_t k = 0; k < classes; ++k) grad_b[k] += prob[k] * inv;
      for (std::size_t p = 0; p < inputs; ++p)
        for (std::size_t k = 0; k < classes; ++k) grad_w[p * classes + k] += prob[k] * row[p] * inv;
    }
    for (std::size_t k = 0; k < clf.weights.size(); ++k) {
      clf.weights[k] -= cfg.step_size * (grad_w[k] + cfg.l2 * clf.weights[k]);
    }
    for (std::size_t k = 0; k < classes; ++k) clf.bias[k] -= cfg.step_size * grad_b[k];
  }
  return clf;
}

PredictionTensor toy_logits(const ToyClassifier& clf, std::span<const Image> images, const AugmentationPolicy& policy) {
  require(!images.empty(), ErrorCode::EmptySet, "no images to score");
  std::vector<float> values;
  values.reserve(images.size() * policy.size() * clf.classes);
  for (const auto& img : images) {
    for (const auto& view : apply_policy(policy, img)) {
      for (double z : clf.logits(view)) values.push_back(static_cast<float>(z));
    }
  }
  return PredictionTensor(images.size(), policy.size(), clf.classes, ScoreKind::Logits, std::move(values));
}

ImageSet make_blobs(std::size_t classes, std::size_t side, std::size_t n, double noise, std::uint64_t seed) {
  return make_blobs(classes, side, n, noise, seed, seed + 1);
}

ImageSet make_blobs(std::size_t classes, std::size_t side, std::size_t n, double noise, std::uint64_t prototype_seed,
                    std::uint64_t sample_seed) {
  require(classes >= 2 && side >= 1 && n >= 1, ErrorCode::InvalidArgument, "blobs need classes >= 2, side, n >= 1");
  Rng proto_rng(prototype_seed);
  std::vector<double> prototypes(classes * side * side);
  for (double& v : prototypes) v = 255.0 * proto_rng.uniform();
  // Average each prototype over the flip group.
  std::vector<double> symmetric(prototypes.size());
  for (std::size_t k = 0; k < classes; ++k) {
    const double* p = prototypes.data() + k * side * side;
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const std::size_t fx = side - 1 - x;
        const std::size_t fy = side - 1 - y;
        symmetric[k * side * side + y * side + x] =
            0.25 * (p[y * side + x] + p[y * side + fx] + p[fy * side + x] + p[fy * side + fx]);
      }
  }

  Rng rng(sample_seed);
  std::vector<Image> images;
  std::vector<ClassIndex> labels;
  images.reserve(n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<ClassIndex>(rng.below(classes));
    std::vector<std::uint8_t> px(side * side);
    for (std::size_t p = 0; p < px.size(); ++p) {
      const double v = symmetric[y * side * side + p] + noise * rng.normal();
      px[p] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }
    images.emplace_back(side, side, 1, std::move(px));
    labels.push_back(y);
  }
  return {std::move(images), LabeledSet(std::move(labels), classes)};
}

DatasetSizeWorld dataset_size_world(const DatasetSizeConfig& cfg, std::size_t repeat) {
  require(!cfg.fractions.empty(), ErrorCode::InvalidArgument, "trend needs at least one fraction");
  const std::uint64_t world_seed = cfg.seed * 1000003ULL + repeat * 7919ULL + 1;
  DatasetSizeWorld world{make_blobs(cfg.classes, cfg.side, cfg.pool, cfg.noise, world_seed, world_seed + 1),
                         make_blobs(cfg.classes, cfg.side, cfg.test, cfg.noise, world_seed, world_seed + 2),
                         cfg.toy.seed + world_seed,
                         {},
                         {}};
  const auto policy = flips_policy();
  ToyConfig toy = cfg.toy;
  toy.seed = world.toy_seed;
  for (double f : cfg.fractions) {
    const auto clf = train_toy(world.pool.images, world.pool.labels, f, toy);
    auto logits = toy_logits(clf, world.test.images, policy);
    const auto raw = argmax_rows(baseline_raw(logits));
    const auto mean = argmax_rows(baseline_mean(logits));
    const auto change = corrections_corruptions(raw, mean, world.test.labels);
    world.points.push_back({f, accuracy(raw, world.test.labels), accuracy(mean, world.test.labels), change.net_pct});
    world.test_logits.push_back(std::move(logits));
  }
  return world;
}

std::vector<DatasetSizePoint> dataset_size_trend(const DatasetSizeConfig& cfg) {
  require(cfg.repeats >= 1, ErrorCode::InvalidArgument, "trend needs at least one repeat");
  std::vector<DatasetSizePoint> points;
  for (double f : cfg.fractions) points.push_back({f, 0.0, 0.0, 0.0});
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto world = dataset_size_world(cfg, r);
    for (std::size_t k = 0; k < points.size(); ++k) {
      points[k].raw_accuracy += world.points[k].raw_accuracy;
      points[k].mean_accuracy += world.points[k].mean_accuracy;
      points[k].net_improvement_pct += world.points[k].net_improvement_pct;
    }
  }
  const double inv = 1.0 / static_cast<double>(cfg.repeats);
  for (auto& p : points) {
    p.raw_accuracy *= inv;
    p.mean_accuracy *= inv;
    p.net_improvement_pct *= inv;
  }
  return points;
}

std::vector<Image> read_idx_images(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  require(bytes.size() >= 16, ErrorCode::TruncatedFile, "IDX image header is truncated");
  require(big_endian_u32(bytes, 0) == 0x00000803, ErrorCode::BadMagic, "not an IDX image file");
  const std::size_t n = big_endian_u32(bytes, 4);
  const std::size_t rows = big_endian_u32(bytes, 8);
  const std::size_t cols = big_endian_u32(bytes, 12);
  require(bytes.size() == 16 + n * rows * cols, ErrorCode::TruncatedFile, "IDX image payload size mismatch");
  std::vector<Image> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* start = reinterpret_cast<const std::uint8_t*>(bytes.data()) + 16 + i * rows * cols;
    out.emplace_back(cols, rows, 1, std::vector<std::uint8_t>(start, start + rows * cols));
  }
  return out;
}

std::vector<ClassIndex> read_idx_labels(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  require(bytes.size() >= 8, ErrorCode::TruncatedFile, "IDX label header is truncated");
  require(big_endian_u32(bytes, 0) == 0x00000801, ErrorCode::BadMagic, "not an IDX label file");
  const std::size_t n = big_endian_u32(bytes, 4);
  require(bytes.size() == 8 + n, ErrorCode::TruncatedFile, "IDX label payload size mismatch");
  std::vector<ClassIndex> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<unsigned char>(bytes[8 + i]);
  return out;
}

}  // namespace tta

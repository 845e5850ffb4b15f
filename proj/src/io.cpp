#include "tta/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "tta/rng.hpp"

namespace tta {
namespace {

constexpr std::string_view kPredMagic = "TTAP";
constexpr std::string_view kLabelMagic = "TTAL";
constexpr std::string_view kWeightMagic = "TTAW";

class ByteWriter {
 public:
  void raw(std::string_view s) { out_ += s; }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  void little(std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string_view what) : bytes_(bytes), what_(what) {}

  void magic(std::string_view expected) {
    require(bytes_.size() >= 4 && bytes_.substr(0, 4) == expected, ErrorCode::BadMagic,
            std::string(what_) + " does not start with " + std::string(expected));
    pos_ = 4;
  }
  void version() {
    const auto v = u32();
    require(v == kFormatVersion, ErrorCode::UnsupportedVersion,
            std::string(what_) + " has version " + std::to_string(v));
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(little(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(little(4)); }
  std::uint64_t u64() { return little(8); }
  float f32() { return std::bit_cast<float>(u32()); }

  // Validates that exactly `count` items of `width` bytes remain.
  void expect_payload(std::uint64_t count, std::uint64_t width) {
    const std::uint64_t remaining = bytes_.size() - pos_;
    require(count <= remaining / width && count * width <= remaining, ErrorCode::TruncatedFile,
            std::string(what_) + " payload is shorter than its header declares");
    require(count * width == remaining, ErrorCode::InvariantViolation,
            std::string(what_) + " has trailing bytes after the payload");
  }

 private:
  std::uint64_t little(int width) {
    require(bytes_.size() - pos_ >= static_cast<std::size_t>(width), ErrorCode::TruncatedFile,
            std::string(what_) + " header is truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + k])) << (8 * k);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string_view bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

// Splits `total` across groups proportionally to `weights`, never exceeding `caps`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> weights,
                                   std::span<const std::size_t> caps) {
  const double weight_sum = static_cast<double>(std::accumulate(weights.begin(), weights.end(), std::size_t{0}));
  std::vector<std::size_t> out(weights.size(), 0);
  std::vector<double> remainder(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < weights.size(); ++g) {
    const double ideal = weight_sum > 0 ? static_cast<double>(total) * static_cast<double>(weights[g]) / weight_sum : 0.0;
    out[g] = std::min(static_cast<std::size_t>(std::floor(ideal)), caps[g]);
    remainder[g] = ideal - std::floor(ideal);
    assigned += out[g];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return remainder[l] > remainder[r]; });
  // Largest remainders first, then anything with spare capacity.
  for (int pass = 0; pass < 2 && assigned < total; ++pass) {
    for (std::size_t g : order) {
      while (assigned < total && out[g] < caps[g]) {
        ++out[g];
        ++assigned;
        if (pass == 0) break;
      }
    }
  }
  return out;
}

}  // namespace

std::string encode_predictions(const PredictionTensor& t) {
  ByteWriter w;
  w.raw(kPredMagic);
  w.u32(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(t.kind()));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.u64(t.n());
  w.u64(t.m());
  w.u64(t.c());
  for (float v : t.values()) w.f32(v);
  return w.take();
}

PredictionTensor decode_predictions(std::string_view bytes) {
  ByteReader r(bytes, "prediction file");
  r.magic(kPredMagic);
  r.version();
  const auto kind = r.u8();
  require(kind <= 1, ErrorCode::InvariantViolation, "unknown score kind " + std::to_string(kind));
  for (int k = 0; k < 3; ++k) require(r.u8() == 0, ErrorCode::InvariantViolation, "nonzero header padding");
  const auto n = r.u64();
  const auto m = r.u64();
  const auto c = r.u64();
  require(n >= 1 && m >= 1 && c >= 2, ErrorCode::InvariantViolation, "tensor header needs N >= 1, M >= 1, C >= 2");
  require(m <= UINT64_MAX / c && n <= UINT64_MAX / (m * c), ErrorCode::InvariantViolation, "tensor header overflows");
  r.expect_payload(n * m * c, 4);
  std::vector<float> values(n * m * c);
  for (auto& v : values) v = r.f32();
  return PredictionTensor(n, m, c, static_cast<ScoreKind>(kind), std::move(values));
}

std::string encode_labels(const LabeledSet& labels) {
  ByteWriter w;
  w.raw(kLabelMagic);
  w.u32(kFormatVersion);
  w.u64(labels.size());
  w.u64(labels.c());
  for (ClassIndex y : labels.labels()) w.u32(y);
  return w.take();
}

LabeledSet decode_labels(std::string_view bytes) {
  ByteReader r(bytes, "label file");
  r.magic(kLabelMagic);
  r.version();
  const auto n = r.u64();
  const auto c = r.u64();
  require(n >= 1, ErrorCode::EmptySet, "label file holds no labels");
  require(c >= 2, ErrorCode::InvariantViolation, "label file needs C >= 2");
  r.expect_payload(n, 4);
  std::vector<ClassIndex> labels(n);
  for (auto& y : labels) y = r.u32();
  return LabeledSet(std::move(labels), c);
}

std::string encode_weights(const AggregationWeights& weights) {
  ByteWriter w;
  w.raw(kWeightMagic);
  w.u32(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(weights.mode()));
  w.u64(weights.m());
  w.u64(weights.c());
  for (float v : weights.values()) w.f32(v);
  return w.take();
}

AggregationWeights decode_weights(std::string_view bytes) {
  ByteReader r(bytes, "weight file");
  r.magic(kWeightMagic);
  r.version();
  const auto mode = r.u8();
  require(mode <= 1, ErrorCode::UnsupportedMode, "unknown weight mode " + std::to_string(mode));
  const auto m = r.u64();
  const auto c = r.u64();
  require(m >= 1 && c >= 2 && m <= UINT64_MAX / c, ErrorCode::InvariantViolation, "weight header needs M >= 1, C >= 2");
  const auto wmode = static_cast<WeightMode>(mode);
  const auto count = AggregationWeights::parameter_count(wmode, m, c);
  r.expect_payload(count, 4);
  std::vector<float> values(count);
  for (auto& v : values) v = r.f32();
  return AggregationWeights(wmode, m, c, std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::IoError, "failed writing " + path.string());
}

void write_predictions(const std::filesystem::path& path, const PredictionTensor& t) {
  write_file(path, encode_predictions(t));
}
PredictionTensor read_predictions(const std::filesystem::path& path) { return decode_predictions(read_file(path)); }
void write_labels(const std::filesystem::path& path, const LabeledSet& labels) { write_file(path, encode_labels(labels)); }
LabeledSet read_labels(const std::filesystem::path& path) { return decode_labels(read_file(path)); }
void write_weights(const std::filesystem::path& path, const AggregationWeights& w) { write_file(path, encode_weights(w)); }
AggregationWeights read_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

void SplitSpec::validate() const {
  require(train >= 0.0 && val >= 0.0 && test >= 0.0, ErrorCode::InvalidArgument, "split fractions must be >= 0");
  require(std::abs(train + val + test - 1.0) <= 1e-9, ErrorCode::InvalidArgument, "split fractions must sum to 1");
}

SplitIndices split_dataset(std::size_t n, std::span<const ClassIndex> labels, const SplitSpec& spec) {
  spec.validate();
  require(n >= 3, ErrorCode::InvalidArgument, "splitting needs n >= 3");
  const auto train_n = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  const auto val_n = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  require(train_n + val_n <= n, ErrorCode::DegenerateSplit, "rounded train and val sizes exceed n");
  const std::size_t test_n = n - train_n - val_n;
  require((spec.train == 0.0 || train_n > 0) && (spec.val == 0.0 || val_n > 0) && (spec.test == 0.0 || test_n > 0),
          ErrorCode::DegenerateSplit, "a part with a positive fraction would be empty");

  Rng rng(spec.seed);
  SplitIndices out;
  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
    out.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n),
                   order.begin() + static_cast<std::ptrdiff_t>(train_n + val_n));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train_n + val_n), order.end());
  } else {
    require(labels.size() == n, ErrorCode::LengthMismatch, "stratified split needs one label per input");
    std::map<ClassIndex, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    std::vector<std::size_t> counts;
    for (auto& [cls, members] : by_class) {
      rng.shuffle(std::span<std::size_t>(members));
      counts.push_back(members.size());
    }
    const auto train_quota = apportion(train_n, counts, counts);
    std::vector<std::size_t> left(counts.size());
    for (std::size_t g = 0; g < counts.size(); ++g) left[g] = counts[g] - train_quota[g];
    const auto val_quota = apportion(val_n, counts, left);
    std::size_t g = 0;
    for (const auto& [cls, members] : by_class) {
      const auto a = members.begin();
      const auto b = a + static_cast<std::ptrdiff_t>(train_quota[g]);
      const auto c = b + static_cast<std::ptrdiff_t>(val_quota[g]);
      out.train.insert(out.train.end(), a, b);
      out.val.insert(out.val.end(), b, c);
      out.test.insert(out.test.end(), c, members.end());
      ++g;
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::vector<std::size_t>> subsample_training(std::span<const std::size_t> pool,
                                                         std::span<const double> increments, std::uint64_t seed,
                                                         std::span<const std::size_t> base) {
  for (std::size_t k = 0; k < increments.size(); ++k) {
    require(increments[k] >= 0.0 && increments[k] <= 1.0, ErrorCode::NonMonotoneIncrements,
            "increments must lie in [0, 1]");
    require(k == 0 || increments[k] > increments[k - 1], ErrorCode::NonMonotoneIncrements,
            "increments must be strictly ascending");
  }
  std::vector<std::size_t> order(pool.begin(), pool.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> out;
  for (double inc : increments) {
    const auto take = static_cast<std::size_t>(std::llround(inc * static_cast<double>(order.size())));
    std::vector<std::size_t> subset(base.begin(), base.end());
    subset.insert(subset.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    out.push_back(std::move(subset));
  }
  return out;
}

PredictionTensor select_rows(const PredictionTensor& t, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCode::EmptySet, "selecting no rows");
  std::vector<float> values;
  values.reserve(indices.size() * t.m() * t.c());
  for (std::size_t i : indices) {
    require(i < t.n(), ErrorCode::DimensionMismatch, "row index outside the tensor");
    const auto block = t.block(i);
    values.insert(values.end(), block.begin(), block.end());
  }
  return PredictionTensor(indices.size(), t.m(), t.c(), t.kind(), std::move(values));
}

LabeledSet select_rows(const LabeledSet& labels, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCode::EmptySet, "selecting no rows");
  std::vector<ClassIndex> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    require(i < labels.size(), ErrorCode::DimensionMismatch, "row index outside the label set");
    out.push_back(labels[i]);
  }
  return LabeledSet(std::move(out), labels.c());
}

}  // namespace tta

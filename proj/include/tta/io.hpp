#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tta/core.hpp"

namespace tta {

inline constexpr std::uint32_t kFormatVersion = 1;

// Little-endian binary interchange.
//   TTAP: "TTAP" u32 version, u8 kind, 3 zero bytes, u64 N, u64 M, u64 C, N*M*C f32
//   TTAL: "TTAL" u32 version, u64 N, u64 C, N u32
//   TTAW: "TTAW" u32 version, u8 mode, u64 M, u64 C, M or M*C f32
std::string encode_predictions(const PredictionTensor& t);
PredictionTensor decode_predictions(std::string_view bytes);
std::string encode_labels(const LabeledSet& labels);
LabeledSet decode_labels(std::string_view bytes);
std::string encode_weights(const AggregationWeights& w);
AggregationWeights decode_weights(std::string_view bytes);

void write_predictions(const std::filesystem::path& path, const PredictionTensor& t);
PredictionTensor read_predictions(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabeledSet& labels);
LabeledSet read_labels(const std::filesystem::path& path);
void write_weights(const std::filesystem::path& path, const AggregationWeights& w);
AggregationWeights read_weights(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

struct SplitSpec {
  double train = 0.4;
  double val = 0.1;
  double test = 0.5;
  std::uint64_t seed = 0;
  bool stratified = false;

  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Disjoint, exhaustive split. Train and val sizes are the rounded fractions of n;
/// the remainder goes to test. Stratified mode apportions each part across classes
/// by largest remainder. Index lists are sorted.
SplitIndices split_dataset(std::size_t n, std::span<const ClassIndex> labels, const SplitSpec& spec);

/// Nested growth subsets for the dataset-size experiment: entry k is `base` plus the
/// first round(increments[k] * |pool|) elements of a seeded shuffle of `pool`.
std::vector<std::vector<std::size_t>> subsample_training(std::span<const std::size_t> pool,
                                                         std::span<const double> increments, std::uint64_t seed,
                                                         std::span<const std::size_t> base = {});

// Gathers inputs by index.
PredictionTensor select_rows(const PredictionTensor& t, std::span<const std::size_t> indices);
LabeledSet select_rows(const LabeledSet& labels, std::span<const std::size_t> indices);

}  // namespace tta

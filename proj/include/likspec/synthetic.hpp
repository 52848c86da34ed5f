#pragma once

#include <cstdint>
#include <vector>

#include "likspec/features.hpp"
#include "likspec/scores.hpp"

namespace likspec::synthetic {

struct PairOptions {
  std::size_t n_pairs = 20;
  std::size_t length = 128;
  std::size_t boosted_bins = 3;
  double boost = 1.5;  // magnitude factor on the boosted bins
  double base_mean = 4.0;
  double base_sd = 1.5;
  bool annotate = false;  // cycle Universal POS tags over the tokens
  std::uint64_t seed = 0;
};

// Paired documents sharing one Gaussian score series per pair. The model
// member is the human series with DFT bins 1..boosted_bins (and their
// mirrors) scaled by `boost`; every other bin is identical. Ids are
// "<key>.human" / "<key>.model" with key "p<index>".
std::vector<ScoredDocument> paired_corpus(const PairOptions& opts);

struct FeatureOptions {
  std::size_t n_samples = 300;
  std::size_t dims = 500;
  std::size_t low_band = 10;
  double shift = 3.0;  // added to the first low_band features of class 1
  std::uint64_t seed = 0;
};

// Standard-normal features; labels alternate 0, 1, 0, ...
FeatureTable separable_features(const FeatureOptions& opts);

}  // namespace likspec::synthetic

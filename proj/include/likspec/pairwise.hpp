#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "likspec/scores.hpp"
#include "likspec/spectrum.hpp"

namespace likspec::pairwise {

enum class Direction { kModelHigher, kHumanHigher };

const char* to_string(Direction d);
Direction parse_direction(std::string_view s);

struct HeuristicConfig {
  std::size_t delta_k = 1;  // number of lowest retained bins summed
  double epsilon = 0.0;     // abstain when the low-band gap is <= epsilon
  Direction direction = Direction::kModelHigher;
};

struct KeyedSpectrum {
  std::string pair_key;
  Spectrum spectrum;
};

struct SpectrumPair {
  std::string pair_key;
  Spectrum human;
  Spectrum model;
};

struct PairVerdict {
  std::string pair_key;
  std::string predicted_model_id;  // empty when abstained
  double margin = 0.0;
  bool abstained = false;
};

// Sum of power over bins k = 1..delta_k.
double low_band_sum(const Spectrum& spec, std::size_t delta_k);

PairVerdict classify_pair(const KeyedSpectrum& a, const KeyedSpectrum& b,
                          const HeuristicConfig& cfg);

// Fraction of pairs whose model member is identified; abstentions score 0.5.
double pair_accuracy(const std::vector<SpectrumPair>& pairs, const HeuristicConfig& cfg);

struct SweepRow {
  std::size_t delta_k = 0;
  Direction direction = Direction::kModelHigher;
  double accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepRow best;
  std::size_t k_max_requested = 0;
  std::size_t k_max_effective = 0;  // capped by the shortest spectrum
  double epsilon = 0.0;
  std::size_t n_pairs = 0;
};

// Every delta_k in 1..k_max and both directions, scored in-sample. Best is
// the highest accuracy, ties to the smaller delta_k, then model_higher.
SweepResult sweep_delta(const std::vector<SpectrumPair>& pairs, std::size_t k_max,
                        double epsilon = 0.0);

// Majority sign of (model - human) low-band sums; ties -> model_higher.
HeuristicConfig calibrate_direction(const std::vector<SpectrumPair>& pairs,
                                    std::size_t delta_k, double epsilon = 0.0);

struct HeldOutSplit {
  std::uint64_t seed = 0;
  HeuristicConfig chosen;
  double calibration_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct HeldOutResult {
  std::vector<HeldOutSplit> splits;
  double mean_test_accuracy = 0.0;
};

// For each seed: shuffle pairs, sweep on the first half, score the chosen
// (delta_k, direction) on the second half. Needs at least 2 pairs.
HeldOutResult held_out_evaluation(const std::vector<SpectrumPair>& pairs, std::size_t k_max,
                                  double epsilon, const std::vector<std::uint64_t>& seeds);

// Joins corpus pairs with their spectra (matched by doc id).
std::vector<SpectrumPair> join_pairs(const PairedCorpus& corpus,
                                     const std::vector<Spectrum>& spectra);

// Pairs from a CSV with header pair_key,human_id,model_id.
std::vector<SpectrumPair> pairs_from_csv(std::string_view text,
                                         const std::vector<Spectrum>& spectra);

// Pairs inferred from doc ids of the form <pair_key>.<role>, where role
// "human" marks the human member and any other role the model member.
std::vector<SpectrumPair> infer_pairs(const std::vector<Spectrum>& spectra);

std::string report_json(const SweepResult& sweep, const HeldOutResult* held_out,
                        const HeuristicConfig& applied,
                        const std::vector<PairVerdict>& verdicts);

std::vector<PairVerdict> classify_all(const std::vector<SpectrumPair>& pairs,
                                      const HeuristicConfig& cfg);

}  // namespace likspec::pairwise

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "likspec/scores.hpp"
#include "likspec/spectrum.hpp"

namespace likspec {

enum class FeatureMode { kPlain, kCircularMag, kCircularComplex };

const char* to_string(FeatureMode m);
FeatureMode parse_feature_mode(std::string_view s);

struct FeatureVector {
  std::string doc_id;
  std::size_t grid_size = 0;
  std::vector<double> values;
  FeatureMode mode = FeatureMode::kPlain;
};

// s_{T+1..N}, s_{1..T}: rotate left by T. Requires 0 <= T < N.
std::vector<double> circularize(std::span<const double> values, long long shift);

// Average over all N rotations of the series.
//
// kCircularMag averages the magnitude spectra. By the DFT shift theorem a
// rotation only multiplies X[k] by a unit phase, so every rotation has the
// same magnitude spectrum and the average equals magnitude_spectrum(series).
//
// kCircularComplex averages the complex spectra before taking magnitudes.
// The phase factors exp(2 pi i k T / N) summed over T = 0..N-1 vanish for
// k != 0, so every retained bin is zero up to rounding.
//
// Neither reading carries information beyond the plain magnitude spectrum;
// both are kept so the identities stay under test.
Spectrum average_spectrum(const NormalizedSeries& series, FeatureMode mode);

// Linear interpolation of power onto frequencies j / (2B), j = 1..B.
// Frequencies outside the spectrum's range take the nearest end bin.
FeatureVector resample(const Spectrum& spec, std::size_t grid_size);

// Inverse view of a feature vector as a spectrum on its own grid.
Spectrum to_spectrum(const FeatureVector& fv);

// zscore -> spectrum per mode -> resample.
FeatureVector build_features(const ScoredDocument& doc, FeatureMode mode,
                             std::size_t grid_size);

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;  // 0 = human, 1 = model
};

// Header doc_id,label,f_1..f_B.
std::string features_to_csv(const FeatureTable& table);
void save_features(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable parse_features_csv(std::string_view text);
FeatureTable load_features(const std::filesystem::path& path);

}  // namespace likspec

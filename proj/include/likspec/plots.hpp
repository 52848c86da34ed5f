#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "likspec/spectrum.hpp"

namespace likspec::plots {

// Per-bin arithmetic mean of spectra sharing one grid.
Spectrum group_mean(const std::vector<Spectrum>& group, const std::string& name = "mean");

// Means per label, keyed by label. labels[i] belongs to spectra[i].
std::map<std::string, Spectrum> group_means(const std::vector<Spectrum>& spectra,
                                            const std::vector<std::string>& labels);

struct Band {
  std::vector<double> lo;
  std::vector<double> hi;
};

// Percentile bootstrap over documents: resample the group with replacement,
// recompute per-bin means, take the (1-level)/2 and (1+level)/2 percentiles.
Band bootstrap_ci(const std::vector<Spectrum>& group, std::size_t resamples = 1000,
                  double level = 0.95, std::uint64_t seed = 0);

// Local linear regression with tricube weights; a point's neighbourhood is
// every x within span * (max x - min x). Evaluated at the input x values.
std::vector<double> smooth(const std::vector<double>& x, const std::vector<double>& y,
                           double span);

struct Curve {
  std::string group;
  std::vector<double> freqs;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
  std::optional<std::vector<double>> smoothed;
};

struct CurveOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::optional<double> span;  // smoothing off when empty
};

// One curve per group, groups in key order. Per-group bootstrap streams are
// derived from (seed, group name).
std::vector<Curve> build_curves(const std::map<std::string, std::vector<Spectrum>>& groups,
                                const CurveOptions& opts);

// Columns group,freq,mean,lo,hi and a trailing smoothed column when any
// curve carries one.
std::string curves_to_csv(const std::vector<Curve>& curves);
std::vector<Curve> parse_curves_csv(std::string_view text);
std::string curves_to_svg(const std::vector<Curve>& curves, const std::string& title = "");

// Format picked from the extension (.csv or .svg).
void emit(const std::vector<Curve>& curves, const std::filesystem::path& path,
          const std::string& title = "");

}  // namespace likspec::plots

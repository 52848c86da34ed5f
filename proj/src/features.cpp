#include "likspec/features.hpp"

#include <algorithm>
#include <cmath>

#include "likspec/error.hpp"
#include "likspec/io.hpp"

namespace likspec {

const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::kPlain: return "plain";
    case FeatureMode::kCircularMag: return "circular_mag";
    case FeatureMode::kCircularComplex: return "circular_complex";
  }
  return "plain";
}

FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "plain") return FeatureMode::kPlain;
  if (s == "circular_mag") return FeatureMode::kCircularMag;
  if (s == "circular_complex") return FeatureMode::kCircularComplex;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature mode '" + std::string(s) + "'");
}

std::vector<double> circularize(std::span<const double> values, long long shift) {
  const auto n = static_cast<long long>(values.size());
  if (shift < 0 || shift >= n) {
    throw Error(ErrorCode::kInvalidArgument,
                "circularize: T=" + std::to_string(shift) + " outside [0, " +
                    std::to_string(n) + ")");
  }
  std::vector<double> out(values.begin(), values.end());
  std::rotate(out.begin(), out.begin() + shift, out.end());
  return out;
}

Spectrum average_spectrum(const NormalizedSeries& series, FeatureMode mode) {
  const std::size_t n = series.values.size();
  if (n < 2) throw Error(ErrorCode::kTooShort, "average_spectrum: N must be >= 2");
  if (mode == FeatureMode::kPlain) return magnitude_spectrum(series);

  const std::size_t half = n / 2;
  std::vector<double> mag_sum(half, 0.0);
  std::vector<Complex> complex_sum(half, Complex{});
  for (std::size_t t = 0; t < n; ++t) {
    const auto rotated = circularize(series.values, static_cast<long long>(t));
    const auto x = dsp::dft(std::span<const double>(rotated));
    for (std::size_t k = 1; k <= half; ++k) {
      if (mode == FeatureMode::kCircularMag) {
        mag_sum[k - 1] += std::abs(x[k]);
      } else {
        complex_sum[k - 1] += x[k];
      }
    }
  }
  Spectrum s;
  s.doc_id = series.doc_id;
  s.n_input = n;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 1; k <= half; ++k) {
    s.freqs.push_back(static_cast<double>(k) / static_cast<double>(n));
    s.power.push_back(mode == FeatureMode::kCircularMag
                          ? mag_sum[k - 1] * inv_n
                          : std::abs(complex_sum[k - 1] * inv_n));
  }
  return s;
}

FeatureVector resample(const Spectrum& spec, std::size_t grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::kInvalidArgument, "resample: B must be >= 2");
  if (spec.bins() < 2) {
    throw Error(ErrorCode::kTooShort,
                "resample: spectrum '" + spec.doc_id + "' has fewer than 2 bins");
  }
  FeatureVector fv;
  fv.doc_id = spec.doc_id;
  fv.grid_size = grid_size;
  fv.values.reserve(grid_size);
  const auto& f = spec.freqs;
  const auto& p = spec.power;
  const double denom = 2.0 * static_cast<double>(grid_size);
  for (std::size_t j = 1; j <= grid_size; ++j) {
    const double target = static_cast<double>(j) / denom;
    if (target <= f.front()) {
      fv.values.push_back(p.front());
    } else if (target >= f.back()) {
      fv.values.push_back(p.back());
    } else {
      const auto hi = static_cast<std::size_t>(
          std::upper_bound(f.begin(), f.end(), target) - f.begin());
      const std::size_t lo = hi - 1;
      const double t = (target - f[lo]) / (f[hi] - f[lo]);
      fv.values.push_back(t == 0.0 ? p[lo] : p[lo] + t * (p[hi] - p[lo]));
    }
  }
  return fv;
}

Spectrum to_spectrum(const FeatureVector& fv) {
  Spectrum s;
  s.doc_id = fv.doc_id;
  s.n_input = 2 * fv.grid_size;
  s.power = fv.values;
  const double denom = 2.0 * static_cast<double>(fv.grid_size);
  for (std::size_t j = 1; j <= fv.grid_size; ++j) {
    s.freqs.push_back(static_cast<double>(j) / denom);
  }
  return s;
}

FeatureVector build_features(const ScoredDocument& doc, FeatureMode mode,
                             std::size_t grid_size) {
  const auto series = zscore(doc);
  auto fv = resample(average_spectrum(series, mode), grid_size);
  fv.mode = mode;
  return fv;
}

std::string features_to_csv(const FeatureTable& table) {
  if (table.ids.size() != table.rows.size() || table.ids.size() != table.labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "feature table columns misaligned");
  }
  const std::size_t b = table.rows.empty() ? 0 : table.rows.front().size();
  std::string out = "doc_id,label";
  for (std::size_t j = 1; j <= b; ++j) out += ",f_" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != b) {
      throw Error(ErrorCode::kLengthMismatch, "feature rows differ in length");
    }
    io::check_csv_field(table.ids[i]);
    out += table.ids[i];
    out += ',';
    out += std::to_string(table.labels[i]);
    for (double v : table.rows[i]) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_features(const std::filesystem::path& path, const FeatureTable& table) {
  io::write_file(path, features_to_csv(table));
}

FeatureTable parse_features_csv(std::string_view text) {
  const auto lines = io::split_lines(text);
  if (lines.empty()) throw ParseError(1, "empty feature file");
  const auto header = io::split_csv(lines[0]);
  if (header.size() < 2 || header[0] != "doc_id" || header[1] != "label") {
    throw ParseError(1, "expected header doc_id,label,f_1..f_B");
  }
  const std::size_t b = header.size() - 2;
  FeatureTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    if (f.size() != b + 2) throw ParseError(i + 1, "wrong number of fields");
    try {
      t.ids.push_back(f[0]);
      const auto label = io::parse_int(f[1]);
      if (label != 0 && label != 1) throw ParseError(i + 1, "label must be 0 or 1");
      t.labels.push_back(static_cast<int>(label));
      std::vector<double> row;
      row.reserve(b);
      for (std::size_t j = 0; j < b; ++j) row.push_back(io::parse_double(f[j + 2]));
      t.rows.push_back(std::move(row));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  return t;
}

FeatureTable load_features(const std::filesystem::path& path) {
  return parse_features_csv(io::read_file(path));
}

}  // namespace likspec

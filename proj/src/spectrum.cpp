#include "likspec/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>

#include "likspec/error.hpp"
#include "likspec/io.hpp"

namespace likspec {

namespace dsp {

namespace {

Complex twiddle(std::size_t k, std::size_t n, bool inverse) {
  const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi *
                       static_cast<double>(k) / static_cast<double>(n);
  return std::polar(1.0, angle);
}

// exp(-i pi n^2 / N), with n^2 reduced mod 2N so the angle stays small.
std::vector<Complex> chirp(std::size_t n) {
  std::vector<Complex> w(n);
  const std::size_t two_n = 2 * n;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t sq = (i * i) % two_n;
    w[i] = std::polar(1.0, -std::numbers::pi * static_cast<double>(sq) /
                               static_cast<double>(n));
  }
  return w;
}

std::vector<Complex> bluestein(std::span<const Complex> x) {
  const std::size_t n = x.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  const auto w = chirp(n);
  std::vector<Complex> a(m), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = x[i] * w[i];
  b[0] = std::conj(w[0]);
  for (std::size_t i = 1; i < n; ++i) {
    b[i] = std::conj(w[i]);
    b[m - i] = std::conj(w[i]);
  }
  fft_pow2(a, false);
  fft_pow2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a, true);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * w[k];
  return out;
}

}  // namespace

void fft_pow2(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!std::has_single_bit(n)) {
    throw Error(ErrorCode::kInvalidArgument, "fft_pow2: length not a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    std::vector<Complex> tw(half);
    for (std::size_t k = 0; k < half; ++k) tw[k] = twiddle(k, len, inverse);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * tw[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : a) c *= scale;
  }
}

std::vector<Complex> dft(std::span<const Complex> x) {
  if (x.size() < 2) throw Error(ErrorCode::kTooShort, "dft: N must be >= 2");
  if (std::has_single_bit(x.size())) {
    std::vector<Complex> a(x.begin(), x.end());
    fft_pow2(a, false);
    return a;
  }
  return bluestein(x);
}

std::vector<Complex> dft(std::span<const double> x) {
  std::vector<Complex> c(x.begin(), x.end());
  return dft(std::span<const Complex>(c));
}

std::vector<Complex> idft(std::span<const Complex> x) {
  // conj(DFT(conj(x))) / N
  std::vector<Complex> c(x.size());
  std::transform(x.begin(), x.end(), c.begin(), [](Complex v) { return std::conj(v); });
  auto out = dft(std::span<const Complex>(c));
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v = std::conj(v) * scale;
  return out;
}

}  // namespace dsp

Spectrum magnitude_spectrum(std::string doc_id, std::span<const double> values) {
  const auto x = dsp::dft(values);
  const std::size_t n = values.size();
  Spectrum s;
  s.doc_id = std::move(doc_id);
  s.n_input = n;
  const std::size_t half = n / 2;
  s.freqs.reserve(half);
  s.power.reserve(half);
  for (std::size_t k = 1; k <= half; ++k) {
    s.freqs.push_back(static_cast<double>(k) / static_cast<double>(n));
    s.power.push_back(std::abs(x[k]));
  }
  return s;
}

Spectrum magnitude_spectrum(const NormalizedSeries& series) {
  return magnitude_spectrum(series.doc_id, series.values);
}

double spectral_overlap(const Spectrum& a, const Spectrum& b) {
  if (a.bins() != b.bins() || a.freqs.size() != b.freqs.size()) {
    throw Error(ErrorCode::kGridMismatch, "spectral_overlap: bin counts differ");
  }
  for (std::size_t i = 0; i < a.freqs.size(); ++i) {
    if (std::abs(a.freqs[i] - b.freqs[i]) > 1e-12) {
      throw Error(ErrorCode::kGridMismatch, "spectral_overlap: frequency grids differ");
    }
  }
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < a.bins(); ++i) {
    lo += std::min(a.power[i], b.power[i]);
    hi += std::max(a.power[i], b.power[i]);
  }
  if (hi == 0.0) return 1.0;
  return lo / hi;
}

std::string spectra_to_csv(std::vector<Spectrum> spectra) {
  std::stable_sort(spectra.begin(), spectra.end(),
                   [](const Spectrum& l, const Spectrum& r) { return l.doc_id < r.doc_id; });
  std::string out = "doc_id,k,freq,power\n";
  for (const auto& s : spectra) {
    io::check_csv_field(s.doc_id);
    for (std::size_t i = 0; i < s.bins(); ++i) {
      out += s.doc_id;
      out += ',';
      out += std::to_string(i + 1);
      out += ',';
      out += io::format_double(s.freqs[i]);
      out += ',';
      out += io::format_double(s.power[i]);
      out += '\n';
    }
  }
  return out;
}

void save_spectra(const std::filesystem::path& path,
                  const std::vector<Spectrum>& spectra) {
  io::write_file(path, spectra_to_csv(spectra));
}

std::vector<Spectrum> parse_spectra_csv(std::string_view text) {
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != "doc_id,k,freq,power") {
    throw ParseError(1, "expected header doc_id,k,freq,power");
  }
  std::map<std::string, Spectrum> by_id;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    if (f.size() != 4) throw ParseError(i + 1, "expected 4 fields");
    try {
      auto& s = by_id[f[0]];
      s.doc_id = f[0];
      const auto k = io::parse_int(f[1]);
      if (k != static_cast<long long>(s.bins()) + 1) {
        throw ParseError(i + 1, "bins for '" + f[0] + "' not contiguous from k=1");
      }
      s.freqs.push_back(io::parse_double(f[2]));
      s.power.push_back(io::parse_double(f[3]));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(i + 1, e.what());
    }
  }
  std::vector<Spectrum> out;
  out.reserve(by_id.size());
  for (auto& [_, s] : by_id) {
    // n_input from the first bin: f_1 = 1/N.
    s.n_input = static_cast<std::size_t>(std::llround(1.0 / s.freqs.front()));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Spectrum> load_spectra(const std::filesystem::path& path) {
  return parse_spectra_csv(io::read_file(path));
}

}  // namespace likspec

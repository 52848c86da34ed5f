#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "likspec/scores.hpp"

namespace likspec {

using Complex = std::complex<double>;

// One-sided magnitude spectrum. Bin k = 1..floor(N/2) is stored at index
// k-1 with normalized frequency k/N; the DC bin is dropped because the input
// is z-scored and its DC component is zero.
struct Spectrum {
  std::string doc_id;
  std::vector<double> freqs;
  std::vector<double> power;
  std::size_t n_input = 0;

  std::size_t bins() const { return power.size(); }
};

namespace dsp {

// Forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N). Power-of-two lengths
// use an iterative radix-2 transform; other lengths go through Bluestein's
// chirp-z reformulation on a padded power-of-two grid. Throws for N < 2.
std::vector<Complex> dft(std::span<const double> x);
std::vector<Complex> dft(std::span<const Complex> x);

// Inverse DFT with 1/N scaling.
std::vector<Complex> idft(std::span<const Complex> x);

// In-place radix-2 FFT; size must be a power of two.
void fft_pow2(std::vector<Complex>& a, bool inverse);

}  // namespace dsp

Spectrum magnitude_spectrum(const NormalizedSeries& series);

// Magnitude spectrum of an arbitrary real series (no normalization).
Spectrum magnitude_spectrum(std::string doc_id, std::span<const double> values);

// sum_k min(a_k, b_k) / sum_k max(a_k, b_k); 1 when both are all zero.
// Throws Error(kGridMismatch) unless both spectra share one frequency grid.
double spectral_overlap(const Spectrum& a, const Spectrum& b);

// CSV with header doc_id,k,freq,power; rows ordered by (doc_id, k).
std::string spectra_to_csv(std::vector<Spectrum> spectra);
void save_spectra(const std::filesystem::path& path,
                  const std::vector<Spectrum>& spectra);
std::vector<Spectrum> parse_spectra_csv(std::string_view text);
std::vector<Spectrum> load_spectra(const std::filesystem::path& path);

}  // namespace likspec

#include "likspec/synthetic.hpp"

#include "likspec/error.hpp"
#include "likspec/rng.hpp"
#include "likspec/spectrum.hpp"

namespace likspec::synthetic {

namespace {

constexpr const char* kTagCycle[] = {"DET", "NOUN", "VERB", "ADJ", "NOUN", "ADP"};

}  // namespace

std::vector<ScoredDocument> paired_corpus(const PairOptions& opts) {
  if (opts.length < 2 * opts.boosted_bins + 2) {
    throw Error(ErrorCode::kInvalidArgument, "series too short for the boosted band");
  }
  Rng rng(opts.seed);
  std::vector<ScoredDocument> docs;
  for (std::size_t p = 0; p < opts.n_pairs; ++p) {
    const std::string key = "p" + std::to_string(p);
    std::vector<double> base(opts.length);
    for (auto& v : base) v = opts.base_mean + opts.base_sd * rng.normal();

    auto spec = dsp::dft(std::span<const double>(base));
    const std::size_t n = opts.length;
    for (std::size_t k = 1; k <= opts.boosted_bins; ++k) {
      spec[k] *= opts.boost;
      spec[n - k] *= opts.boost;
    }
    const auto back = dsp::idft(spec);
    std::vector<double> boosted(n);
    for (std::size_t i = 0; i < n; ++i) boosted[i] = back[i].real();

    for (int role = 0; role < 2; ++role) {
      ScoredDocument d;
      d.pair_key = key;
      d.source = role == 0 ? Source::kHuman : Source::kModel;
      d.id = key + (role == 0 ? ".human" : ".model");
      d.model_name = role == 0 ? "" : "synthetic";
      d.nll = role == 0 ? base : boosted;
      d.tokens.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        d.tokens.push_back((i + 1) % 12 == 0 ? "." : "w" + std::to_string(i % 97));
      }
      if (opts.annotate) {
        std::vector<std::string> tags(n);
        for (std::size_t i = 0; i < n; ++i) {
          tags[i] = d.tokens[i] == "." ? "PUNCT" : kTagCycle[i % 6];
        }
        d.annotations = std::move(tags);
      }
      docs.push_back(std::move(d));
    }
  }
  return docs;
}

FeatureTable separable_features(const FeatureOptions& opts) {
  Rng rng(opts.seed);
  FeatureTable t;
  for (std::size_t i = 0; i < opts.n_samples; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> row(opts.dims);
    for (std::size_t j = 0; j < opts.dims; ++j) {
      row[j] = rng.normal() + (label == 1 && j < opts.low_band ? opts.shift : 0.0);
    }
    t.ids.push_back("s" + std::to_string(i));
    t.labels.push_back(label);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace likspec::synthetic

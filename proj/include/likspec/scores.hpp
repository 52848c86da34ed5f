#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace likspec {

enum class Source { kHuman, kModel };

const char* to_string(Source s);
Source parse_source(std::string_view s);

// A token sequence with aligned per-token negative log-probabilities (nats).
struct ScoredDocument {
  std::string id;
  std::string pair_key;
  Source source = Source::kHuman;
  std::string model_name;
  std::vector<std::string> tokens;
  std::vector<double> nll;
  std::optional<std::vector<std::string>> annotations;

  std::size_t size() const { return tokens.size(); }

  // Throws Error(kLengthMismatch) on misaligned fields, kNumeric on a
  // non-finite score, kTooShort when fewer than two tokens.
  void validate() const;

  friend bool operator==(const ScoredDocument&, const ScoredDocument&) = default;
};

// Z-scored likelihood of one document.
struct NormalizedSeries {
  std::string doc_id;
  std::vector<double> values;
  double mu = 0.0;
  double sigma = 1.0;
};

struct PairedCorpus {
  std::vector<ScoredDocument> docs;
  // (human doc id, model doc id)
  std::vector<std::pair<std::string, std::string>> pairs;
  // pair_keys that had no complete human/model pair
  std::vector<std::string> incomplete_keys;

  const ScoredDocument& doc(std::string_view id) const;
};

std::vector<ScoredDocument> parse_scores(std::string_view jsonl);
std::vector<ScoredDocument> load_scores(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<ScoredDocument>& docs);
void save_scores(const std::filesystem::path& path,
                 const std::vector<ScoredDocument>& docs);

// (x - mean) / sample-std, sample std with the N-1 denominator.
NormalizedSeries zscore(const ScoredDocument& doc);
NormalizedSeries zscore(std::string doc_id, const std::vector<double>& values);

PairedCorpus build_pairs(std::vector<ScoredDocument> docs);

// First min(n, N) positions; id gets ".trunc<n>".
ScoredDocument truncate(const ScoredDocument& doc, long long n);

}  // namespace likspec

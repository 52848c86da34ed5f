#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "likspec/scores.hpp"

namespace likspec::ngram {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kTokenizerVersion = "lower-ws-punct/1";

// Lowercases ASCII letters, splits on whitespace, and peels leading and
// trailing ASCII punctuation off each word as one token per character.
// "Hello, world." -> {"hello", ",", "world", "."}
std::vector<std::string> tokenize(std::string_view line);

// Lowercased form used for vocabulary lookup of pre-tokenized input.
std::string normalize_token(std::string_view token);

// Word-level bigram model with add-k smoothing:
//   P(w | v) = (c(v, w) + k) / (c(v) + k * |V|)
// where c(v) is the number of bigrams with context v and V is the full
// vocabulary including <unk>, <s> and </s>. Summed over V the conditional
// distribution is exactly normalized for every context.
class Model {
 public:
  struct Options {
    long long min_count = 1;
    double k = 0.1;
  };

  Model() = default;

  static Model train(const std::vector<std::string>& lines, Options opts);
  static Model train_file(const std::filesystem::path& corpus, Options opts);

  double k() const { return k_; }
  long long min_count() const { return min_count_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  long long total_tokens() const { return total_tokens_; }
  const std::string& corpus_label() const { return corpus_label_; }

  bool in_vocab(std::string_view w) const;
  long long unigram_count(std::string_view w) const;
  long long bigram_count(std::string_view v, std::string_view w) const;
  // Number of bigrams whose first element is v.
  long long context_count(std::string_view v) const;

  // Vocabulary in sorted order.
  std::vector<std::string> vocab() const;

  // Conditional probability of w after v; both mapped to <unk> if unknown.
  double prob(std::string_view w, std::string_view v) const;

  // -ln P(t_i | t_{i-1}) with t_0 context <s>. Tokens are normalized and
  // mapped to <unk> when out of vocabulary. Throws on empty input.
  std::vector<double> score_tokens(const std::vector<std::string>& tokens) const;

  // Copy of doc with nll replaced by score_tokens(doc.tokens).
  ScoredDocument score_document(const ScoredDocument& doc) const;

  std::string to_json() const;
  static Model from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  std::uint32_t id_of(std::string_view w) const;
  void rebuild_index();

  double k_ = 0.1;
  long long min_count_ = 1;
  long long total_tokens_ = 0;
  std::string corpus_label_;
  std::vector<std::string> vocab_;  // sorted
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<long long> unigrams_;  // by vocab id
  std::vector<long long> contexts_;  // by vocab id
  std::map<std::pair<std::uint32_t, std::uint32_t>, long long> bigrams_;
};

}  // namespace likspec::ngram

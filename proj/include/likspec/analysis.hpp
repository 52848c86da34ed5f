#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "likspec/ngram.hpp"
#include "likspec/scores.hpp"
#include "likspec/spectrum.hpp"

namespace likspec::analysis {

enum class LeadingAnswer { kNone, kYes, kNo };

// Inspects the first token after the first prompt_len positions,
// case-insensitively and ignoring surrounding whitespace.
LeadingAnswer leading_answer(const ScoredDocument& doc, std::size_t prompt_len = 0);

struct StripResult {
  ScoredDocument doc;
  bool stripped = false;
};

// Drops a leading "yes"/"no" token (and one comma token right after it),
// keeping nll and annotations aligned. Repeats while the new leading token
// is again an answer ("Yes, no ..."), so the operation is idempotent.
// Scores are not recomputed here.
StripResult strip_leading_yesno(const ScoredDocument& doc, std::size_t prompt_len = 0);

struct YesNoCount {
  std::size_t yes = 0;
  std::size_t no = 0;
  std::size_t total = 0;
};

// Keyed "human" for human documents and "model:<model_name>" otherwise.
std::string group_key(const ScoredDocument& doc);
std::map<std::string, YesNoCount> count_yesno(const std::vector<ScoredDocument>& docs,
                                              std::size_t prompt_len = 0);

enum class MaskMode { kMeanReplace, kSentenceUniformRandom };

struct MaskSpec {
  std::set<std::string> tags;
  MaskMode mode = MaskMode::kMeanReplace;
  std::uint64_t seed = 0;
};

// Sentence extents split after tokens ".", "!" and "?": [begin, end).
std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(
    const std::vector<std::string>& tokens);

// Replaces scores at positions whose tag is in spec.tags. kMeanReplace uses
// the mean original score of the masked positions (the document mean is
// therefore unchanged); kSentenceUniformRandom draws uniformly between
// the minimum and maximum original score of the enclosing sentence (the
// whole document for one-token sentences), seeded per document.
ScoredDocument mask_scores(const ScoredDocument& doc, const MaskSpec& spec);

struct Condition {
  enum class Kind { kYesNo, kLength, kPosMask };
  Kind kind = Kind::kYesNo;
  long long length = 0;
  MaskSpec mask;

  // "yesno", "length:<n>", or "mask:<TAGS>:<mean|random>" where TAGS is a
  // '+'- or ','-separated tag list; "NVA" expands to NOUN+VERB+ADJ.
  static Condition parse(std::string_view text, std::uint64_t seed = 0);
  std::string describe() const;
};

struct Estimator {
  enum class Kind { kReuseScores, kRescoreNgram };
  Kind kind = Kind::kReuseScores;
  std::shared_ptr<const ngram::Model> model;

  static Estimator reuse() { return {}; }
  static Estimator rescore(std::shared_ptr<const ngram::Model> m) {
    return {Kind::kRescoreNgram, std::move(m)};
  }
  std::string describe() const;
};

struct GroupSpectra {
  Spectrum before;
  Spectrum after;
  std::size_t n_docs = 0;
};

struct AblationReport {
  std::string condition;
  std::string estimator;
  std::uint64_t seed = 0;
  std::size_t grid_size = 0;
  GroupSpectra human;
  GroupSpectra model;
  double overlap_human = 1.0;
  double overlap_model = 1.0;
  std::map<std::string, long long> counts;

  std::string to_json() const;
};

// Applies the condition to every document, recomputes z-scores and spectra,
// averages the resampled spectra per source before and after, and reports
// the before/after spectral overlap per source. Documents that become too
// short or constant after the condition are skipped and counted.
AblationReport run_ablation(const PairedCorpus& corpus, const Condition& condition,
                            const Estimator& estimator, std::size_t grid_size = 64);

}  // namespace likspec::analysis

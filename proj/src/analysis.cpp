#include "likspec/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/features.hpp"
#include "likspec/io.hpp"
#include "likspec/rng.hpp"

namespace likspec::analysis {

namespace {

std::string trimmed_lower(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return ngram::normalize_token(s.substr(b, e - b + 1));
}

bool is_sentence_end(std::string_view tok) {
  const auto t = trimmed_lower(tok);
  return t == "." || t == "!" || t == "?";
}

}  // namespace

LeadingAnswer leading_answer(const ScoredDocument& doc, std::size_t prompt_len) {
  if (prompt_len >= doc.tokens.size()) return LeadingAnswer::kNone;
  const auto t = trimmed_lower(doc.tokens[prompt_len]);
  if (t == "yes") return LeadingAnswer::kYes;
  if (t == "no") return LeadingAnswer::kNo;
  return LeadingAnswer::kNone;
}

StripResult strip_leading_yesno(const ScoredDocument& doc, std::size_t prompt_len) {
  StripResult r{doc, false};
  auto& d = r.doc;
  while (leading_answer(d, prompt_len) != LeadingAnswer::kNone) {
    std::size_t drop = 1;
    if (prompt_len + 1 < d.tokens.size() && trimmed_lower(d.tokens[prompt_len + 1]) == ",") {
      drop = 2;
    }
    const auto first = static_cast<std::ptrdiff_t>(prompt_len);
    const auto last = static_cast<std::ptrdiff_t>(prompt_len + drop);
    d.tokens.erase(d.tokens.begin() + first, d.tokens.begin() + last);
    d.nll.erase(d.nll.begin() + first, d.nll.begin() + last);
    if (d.annotations) {
      d.annotations->erase(d.annotations->begin() + first, d.annotations->begin() + last);
    }
    r.stripped = true;
  }
  return r;
}

std::string group_key(const ScoredDocument& doc) {
  return doc.source == Source::kHuman ? "human" : "model:" + doc.model_name;
}

std::map<std::string, YesNoCount> count_yesno(const std::vector<ScoredDocument>& docs,
                                              std::size_t prompt_len) {
  std::map<std::string, YesNoCount> out;
  for (const auto& d : docs) {
    auto& c = out[group_key(d)];
    ++c.total;
    switch (leading_answer(d, prompt_len)) {
      case LeadingAnswer::kYes: ++c.yes; break;
      case LeadingAnswer::kNo: ++c.no; break;
      case LeadingAnswer::kNone: break;
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sentence_spans(
    const std::vector<std::string>& tokens) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_sentence_end(tokens[i])) {
      spans.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  if (begin < tokens.size()) spans.emplace_back(begin, tokens.size());
  return spans;
}

ScoredDocument mask_scores(const ScoredDocument& doc, const MaskSpec& spec) {
  if (!doc.annotations) {
    throw Error(ErrorCode::kInvalidArgument, doc.id + ": POS masking needs annotations");
  }
  if (doc.annotations->size() != doc.nll.size()) {
    throw Error(ErrorCode::kLengthMismatch, doc.id + ": annotations misaligned");
  }
  if (spec.tags.empty()) throw Error(ErrorCode::kInvalidArgument, "mask has no tags");
  ScoredDocument out = doc;
  const auto& tags = *doc.annotations;
  if (spec.mode == MaskMode::kMeanReplace) {
    // Mean over the masked positions, so the document mean is unchanged.
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (spec.tags.count(tags[i])) {
        sum += doc.nll[i];
        ++n;
      }
    }
    if (n == 0) return out;
    const double mean = sum / static_cast<double>(n);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (spec.tags.count(tags[i])) out.nll[i] = mean;
    }
    return out;
  }
  const auto [doc_min, doc_max] = std::minmax_element(doc.nll.begin(), doc.nll.end());
  Rng rng(mix_seed(spec.seed, doc.id));
  for (const auto& [b, e] : sentence_spans(doc.tokens)) {
    double lo = *doc_min, hi = *doc_max;
    if (e - b > 1) {
      const auto [smin, smax] = std::minmax_element(doc.nll.begin() + static_cast<std::ptrdiff_t>(b),
                                                    doc.nll.begin() + static_cast<std::ptrdiff_t>(e));
      lo = *smin;
      hi = *smax;
    }
    for (std::size_t i = b; i < e; ++i) {
      if (spec.tags.count(tags[i])) out.nll[i] = rng.uniform(lo, hi);
    }
  }
  return out;
}

Condition Condition::parse(std::string_view text, std::uint64_t seed) {
  Condition c;
  c.mask.seed = seed;
  if (text == "yesno") {
    c.kind = Kind::kYesNo;
    return c;
  }
  if (text.starts_with("length:")) {
    c.kind = Kind::kLength;
    c.length = io::parse_int(text.substr(7));
    if (c.length < 2) throw Error(ErrorCode::kInvalidArgument, "length must be >= 2");
    return c;
  }
  if (text.starts_with("mask:")) {
    c.kind = Kind::kPosMask;
    std::string_view rest = text.substr(5);
    const auto colon = rest.find(':');
    std::string_view tag_text = rest.substr(0, colon);
    std::string_view mode = colon == std::string_view::npos ? "mean" : rest.substr(colon + 1);
    if (mode == "mean") c.mask.mode = MaskMode::kMeanReplace;
    else if (mode == "random") c.mask.mode = MaskMode::kSentenceUniformRandom;
    else throw Error(ErrorCode::kInvalidArgument, "mask mode must be mean or random");
    std::size_t start = 0;
    while (start <= tag_text.size()) {
      auto end = tag_text.find_first_of("+,", start);
      if (end == std::string_view::npos) end = tag_text.size();
      std::string tag(tag_text.substr(start, end - start));
      if (tag == "NVA") {
        c.mask.tags.insert({"NOUN", "VERB", "ADJ"});
      } else if (!tag.empty()) {
        c.mask.tags.insert(tag);
      }
      start = end + 1;
    }
    if (c.mask.tags.empty()) throw Error(ErrorCode::kInvalidArgument, "mask needs tags");
    return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown condition '" + std::string(text) + "'");
}

std::string Condition::describe() const {
  switch (kind) {
    case Kind::kYesNo: return "yesno";
    case Kind::kLength: return "length:" + std::to_string(length);
    case Kind::kPosMask: {
      std::string t;
      for (const auto& tag : mask.tags) t += (t.empty() ? "" : "+") + tag;
      return "mask:" + t + (mask.mode == MaskMode::kMeanReplace ? ":mean" : ":random");
    }
  }
  return "";
}

std::string Estimator::describe() const {
  if (kind == Kind::kReuseScores) return "reuse";
  return "ngram:" + (model ? model->corpus_label() : std::string("?"));
}

namespace {

struct Accumulator {
  std::vector<double> before;
  std::vector<double> after;
  std::size_t n = 0;
};

Spectrum mean_spectrum(const std::vector<double>& sum, std::size_t n, std::size_t grid,
                       const std::string& id) {
  FeatureVector fv;
  fv.doc_id = id;
  fv.grid_size = grid;
  fv.values = sum;
  for (auto& v : fv.values) v /= static_cast<double>(n);
  return to_spectrum(fv);
}

}  // namespace

AblationReport run_ablation(const PairedCorpus& corpus, const Condition& condition,
                            const Estimator& estimator, std::size_t grid_size) {
  if (estimator.kind == Estimator::Kind::kRescoreNgram && !estimator.model) {
    throw Error(ErrorCode::kConfig, "ngram estimator without a model");
  }
  AblationReport rep;
  rep.condition = condition.describe();
  rep.estimator = estimator.describe();
  rep.seed = condition.mask.seed;
  rep.grid_size = grid_size;
  Accumulator acc[2];
  for (auto& a : acc) {
    a.before.assign(grid_size, 0.0);
    a.after.assign(grid_size, 0.0);
  }
  auto rescore = [&](const ScoredDocument& d) {
    return estimator.kind == Estimator::Kind::kRescoreNgram ? estimator.model->score_document(d)
                                                            : d;
  };
  auto features = [&](const ScoredDocument& d) {
    return resample(magnitude_spectrum(zscore(d)), grid_size).values;
  };

  for (const auto& doc : corpus.docs) {
    const std::string src = to_string(doc.source);
    if (condition.kind == Condition::Kind::kPosMask && !doc.annotations) {
      throw Error(ErrorCode::kInvalidArgument,
                  doc.id + ": POS-mask condition needs annotations");
    }
    const ScoredDocument base = rescore(doc);
    ScoredDocument after;
    switch (condition.kind) {
      case Condition::Kind::kYesNo: {
        switch (leading_answer(doc)) {
          case LeadingAnswer::kYes: ++rep.counts["yes_" + src]; break;
          case LeadingAnswer::kNo: ++rep.counts["no_" + src]; break;
          case LeadingAnswer::kNone: break;
        }
        auto s = strip_leading_yesno(doc);
        if (s.stripped) ++rep.counts["stripped_" + src];
        after = s.stripped ? rescore(s.doc) : base;
        break;
      }
      case Condition::Kind::kLength:
        after = rescore(truncate(doc, condition.length));
        if (after.size() < doc.size()) ++rep.counts["truncated_" + src];
        break;
      case Condition::Kind::kPosMask: {
        after = mask_scores(base, condition.mask);
        long long masked = 0;
        for (const auto& t : *doc.annotations) masked += condition.mask.tags.count(t);
        rep.counts["masked_positions_" + src] += masked;
        break;
      }
    }
    std::vector<double> fb, fa;
    try {
      fb = features(base);
      fa = features(after);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooShort && e.code() != ErrorCode::kDegenerate) throw;
      ++rep.counts["skipped_" + src];
      continue;
    }
    auto& a = acc[doc.source == Source::kModel];
    for (std::size_t j = 0; j < grid_size; ++j) {
      a.before[j] += fb[j];
      a.after[j] += fa[j];
    }
    ++a.n;
  }
  for (int g = 0; g < 2; ++g) {
    if (acc[g].n == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("ablation: no usable ") + (g ? "model" : "human") + " documents");
    }
  }
  rep.human = {mean_spectrum(acc[0].before, acc[0].n, grid_size, "human.before"),
               mean_spectrum(acc[0].after, acc[0].n, grid_size, "human.after"), acc[0].n};
  rep.model = {mean_spectrum(acc[1].before, acc[1].n, grid_size, "model.before"),
               mean_spectrum(acc[1].after, acc[1].n, grid_size, "model.after"), acc[1].n};
  rep.counts["docs_human"] = static_cast<long long>(acc[0].n);
  rep.counts["docs_model"] = static_cast<long long>(acc[1].n);
  rep.overlap_human = spectral_overlap(rep.human.before, rep.human.after);
  rep.overlap_model = spectral_overlap(rep.model.before, rep.model.after);
  return rep;
}

std::string AblationReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "likspec.ablation_report";
  j["version"] = 1;
  j["condition"] = condition;
  j["estimator"] = estimator;
  j["seed"] = seed;
  j["grid_size"] = grid_size;
  j["overlap_human"] = overlap_human;
  j["overlap_model"] = overlap_model;
  j["counts"] = counts;
  j["freqs"] = human.before.freqs;
  j["spectra"] = {{"human_before", human.before.power},
                  {"human_after", human.after.power},
                  {"model_before", model.before.power},
                  {"model_after", model.after.power}};
  return j.dump(1) + "\n";
}

}  // namespace likspec::analysis

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "likspec/analysis.hpp"
#include "likspec/error.hpp"
#include "likspec/synthetic.hpp"
#include "oracles.hpp"

using namespace likspec;
using namespace likspec::analysis;

namespace {

ScoredDocument doc_from(std::vector<std::string> tokens, std::string id = "d") {
  ScoredDocument d;
  d.id = std::move(id);
  d.pair_key = "k";
  d.tokens = std::move(tokens);
  for (std::size_t i = 0; i < d.tokens.size(); ++i) d.nll.push_back(1.0 + static_cast<double>(i));
  return d;
}

double mean_of(const std::vector<double>& v) { return oracle::mean(v); }

}  // namespace

TEST(StripYesNo, Examples) {
  auto r = strip_leading_yesno(doc_from({"Yes", ",", "the", "cell"}));
  EXPECT_TRUE(r.stripped);
  EXPECT_EQ(r.doc.tokens, (std::vector<std::string>{"the", "cell"}));
  EXPECT_EQ(r.doc.nll, (std::vector<double>{3.0, 4.0}));

  r = strip_leading_yesno(doc_from({"Maybe", "so"}));
  EXPECT_FALSE(r.stripped);
  EXPECT_EQ(r.doc.tokens.size(), 2u);

  r = strip_leading_yesno(doc_from({"no", "evidence", "found"}));
  EXPECT_TRUE(r.stripped);
  EXPECT_EQ(r.doc.tokens, (std::vector<std::string>{"evidence", "found"}));

  r = strip_leading_yesno(doc_from({" YES ", "it", "is"}));
  EXPECT_TRUE(r.stripped);
}

TEST(StripYesNo, PromptOffsetAndAnnotations) {
  auto d = doc_from({"q1", "q2", "Yes", ",", "a", "b"});
  d.annotations = std::vector<std::string>{"X", "X", "INTJ", "PUNCT", "NOUN", "VERB"};
  const auto r = strip_leading_yesno(d, 2);
  EXPECT_TRUE(r.stripped);
  EXPECT_EQ(r.doc.tokens, (std::vector<std::string>{"q1", "q2", "a", "b"}));
  EXPECT_EQ(*r.doc.annotations, (std::vector<std::string>{"X", "X", "NOUN", "VERB"}));
  EXPECT_NO_THROW(r.doc.validate());
}

TEST(StripYesNo, Idempotent) {
  for (const auto& toks : std::vector<std::vector<std::string>>{
           {"Yes", ",", "no", "way"}, {"no", "yes", "x"}, {"plain", "text"}, {"Yes", "Yes", ","}}) {
    const auto once = strip_leading_yesno(doc_from(toks));
    const auto twice = strip_leading_yesno(once.doc);
    EXPECT_EQ(twice.doc, once.doc);
    EXPECT_FALSE(twice.stripped);
  }
  EXPECT_EQ(strip_leading_yesno(doc_from({"Yes", ",", "no", "way"})).doc.tokens,
            std::vector<std::string>{"way"});
}

TEST(CountYesNo, Groups) {
  std::vector<ScoredDocument> docs;
  auto h = doc_from({"The", "answer"}, "h1");
  docs.push_back(h);
  for (int i = 0; i < 4; ++i) {
    auto m = doc_from({i < 2 ? "Yes" : (i == 2 ? "No" : "Perhaps"), "x"}, "m" + std::to_string(i));
    m.source = Source::kModel;
    m.model_name = "gpt-4";
    docs.push_back(m);
  }
  const auto c = count_yesno(docs);
  EXPECT_EQ(c.at("human").yes, 0u);
  EXPECT_EQ(c.at("human").no, 0u);
  EXPECT_EQ(c.at("human").total, 1u);
  EXPECT_EQ(c.at("model:gpt-4").yes, 2u);
  EXPECT_EQ(c.at("model:gpt-4").no, 1u);
  EXPECT_EQ(c.at("model:gpt-4").total, 4u);
  EXPECT_TRUE(count_yesno({}).empty());
}

TEST(Sentences, Spans) {
  const auto s = sentence_spans({"a", "b", ".", "c", "!", "d"});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], std::make_pair(std::size_t{0}, std::size_t{3}));
  EXPECT_EQ(s[1], std::make_pair(std::size_t{3}, std::size_t{5}));
  EXPECT_EQ(s[2], std::make_pair(std::size_t{5}, std::size_t{6}));
}

TEST(MaskScores, MeanReplaceExample) {
  auto d = doc_from({"a", "b", "c"});
  d.annotations = std::vector<std::string>{"DET", "NOUN", "VERB"};
  auto out = mask_scores(d, {{"NOUN"}, MaskMode::kMeanReplace, 0});
  EXPECT_EQ(out.nll, (std::vector<double>{1.0, 2.0, 3.0}));
  d.nll = {1.0, 5.0, 3.0};
  out = mask_scores(d, {{"NOUN"}, MaskMode::kMeanReplace, 0});
  EXPECT_EQ(out.nll, d.nll);
  out = mask_scores(d, {{"NOUN", "VERB"}, MaskMode::kMeanReplace, 0});
  EXPECT_EQ(out.nll, (std::vector<double>{1.0, 4.0, 4.0}));
  out = mask_scores(d, {{"ADV"}, MaskMode::kMeanReplace, 0});
  EXPECT_EQ(out, d);
}

TEST(MaskScores, Errors) {
  auto d = doc_from({"a", "b"});
  EXPECT_THROW(mask_scores(d, {{"NOUN"}, MaskMode::kMeanReplace, 0}), Error);
  d.annotations = std::vector<std::string>{"NOUN", "VERB"};
  EXPECT_THROW(mask_scores(d, {{}, MaskMode::kMeanReplace, 0}), Error);
}

TEST(MaskScoresProperty, MeanPreservedAndShapeKept) {
  Rng rng(1);
  const std::vector<std::string> tagset = {"NOUN", "VERB", "ADJ", "DET", "PUNCT"};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(200);
    ScoredDocument d;
    d.id = "d" + std::to_string(trial);
    d.nll = oracle::random_vector(rng, n, 3.0);
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) {
      d.tokens.push_back(rng.index(8) == 0 ? "." : "w");
      tags.push_back(tagset[rng.index(tagset.size())]);
    }
    d.annotations = tags;
    const auto out = mask_scores(d, {{"NOUN", "ADJ"}, MaskMode::kMeanReplace, 0});
    const double m = mean_of(d.nll);
    EXPECT_NEAR(mean_of(out.nll), m, 1e-12 * (1.0 + std::abs(m)));
    EXPECT_EQ(out.tokens, d.tokens);
    EXPECT_EQ(out.annotations, d.annotations);
    for (std::size_t i = 0; i < n; ++i) {
      if (tags[i] != "NOUN" && tags[i] != "ADJ") EXPECT_EQ(out.nll[i], d.nll[i]);
    }
  }
}

TEST(MaskScoresProperty, RandomWithinSentenceBounds) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.index(100);
    ScoredDocument d;
    d.id = "d" + std::to_string(trial);
    d.nll = oracle::random_vector(rng, n);
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) {
      d.tokens.push_back(rng.index(6) == 0 ? "." : "w");
      tags.push_back(rng.index(2) ? "NOUN" : "DET");
    }
    d.annotations = tags;
    const MaskSpec spec{{"NOUN"}, MaskMode::kSentenceUniformRandom, 99};
    const auto out = mask_scores(d, spec);
    EXPECT_EQ(out, mask_scores(d, spec));
    const auto [dmin, dmax] = std::minmax_element(d.nll.begin(), d.nll.end());
    for (const auto& [b, e] : sentence_spans(d.tokens)) {
      double lo = *dmin, hi = *dmax;
      if (e - b > 1) {
        lo = *std::min_element(d.nll.begin() + b, d.nll.begin() + e);
        hi = *std::max_element(d.nll.begin() + b, d.nll.begin() + e);
      }
      for (std::size_t i = b; i < e; ++i) {
        EXPECT_GE(out.nll[i], lo);
        EXPECT_LE(out.nll[i], hi);
        if (tags[i] == "DET") EXPECT_EQ(out.nll[i], d.nll[i]);
      }
    }
  }
}

TEST(Condition, Parse) {
  EXPECT_EQ(Condition::parse("yesno").kind, Condition::Kind::kYesNo);
  const auto len = Condition::parse("length:50");
  EXPECT_EQ(len.kind, Condition::Kind::kLength);
  EXPECT_EQ(len.length, 50);
  const auto nva = Condition::parse("mask:NVA:random", 7);
  EXPECT_EQ(nva.mask.tags, (std::set<std::string>{"ADJ", "NOUN", "VERB"}));
  EXPECT_EQ(nva.mask.mode, MaskMode::kSentenceUniformRandom);
  EXPECT_EQ(nva.mask.seed, 7u);
  EXPECT_EQ(nva.describe(), "mask:ADJ+NOUN+VERB:random");
  EXPECT_EQ(Condition::parse("mask:NOUN,VERB:mean").mask.tags.size(), 2u);
  EXPECT_THROW(Condition::parse("mask::mean"), Error);
  EXPECT_THROW(Condition::parse("mask:NOUN:median"), Error);
  EXPECT_THROW(Condition::parse("length:1"), Error);
  EXPECT_THROW(Condition::parse("shuffle"), Error);
}

TEST(Ablation, IdentityMaskOverlapOne) {
  synthetic::PairOptions o;
  o.n_pairs = 8;
  o.annotate = true;
  const auto corpus = build_pairs(synthetic::paired_corpus(o));
  const auto rep = run_ablation(corpus, Condition::parse("mask:SYM:mean"), Estimator::reuse());
  EXPECT_EQ(rep.overlap_human, 1.0);
  EXPECT_EQ(rep.overlap_model, 1.0);
  EXPECT_EQ(rep.human.n_docs, 8u);
  EXPECT_EQ(rep.counts.at("masked_positions_human"), 0);
}

TEST(Ablation, DeterministicReport) {
  synthetic::PairOptions o;
  o.n_pairs = 6;
  o.annotate = true;
  const auto corpus = build_pairs(synthetic::paired_corpus(o));
  const auto c = Condition::parse("mask:NOUN+VERB:random", 3);
  const auto a = run_ablation(corpus, c, Estimator::reuse()).to_json();
  EXPECT_EQ(a, run_ablation(corpus, c, Estimator::reuse()).to_json());
  EXPECT_NE(a, run_ablation(corpus, Condition::parse("mask:NOUN+VERB:random", 4),
                            Estimator::reuse())
                   .to_json());
}

TEST(Ablation, MaskedStructureLowersModelOverlap) {
  // Model documents carry a strong slow oscillation only at NOUN positions;
  // masking NOUNs removes it, while human NOUN positions are plain noise.
  Rng rng(5);
  std::vector<ScoredDocument> docs;
  const std::size_t n = 120;
  for (int p = 0; p < 10; ++p) {
    for (int role = 0; role < 2; ++role) {
      ScoredDocument d;
      d.pair_key = "p" + std::to_string(p);
      d.id = d.pair_key + (role ? ".model" : ".human");
      d.source = role ? Source::kModel : Source::kHuman;
      d.model_name = role ? "m" : "";
      std::vector<std::string> tags;
      for (std::size_t i = 0; i < n; ++i) {
        const bool noun = i % 3 == 0;
        tags.push_back(noun ? "NOUN" : "DET");
        double v = rng.normal();
        if (role && noun) v += 6.0 * std::sin(2 * std::numbers::pi * 2.0 * static_cast<double>(i) / n);
        d.nll.push_back(v);
        d.tokens.push_back("w");
      }
      d.annotations = tags;
      docs.push_back(d);
    }
  }
  const auto rep = run_ablation(build_pairs(docs), Condition::parse("mask:NOUN:mean"),
                                Estimator::reuse());
  EXPECT_LT(rep.overlap_model, rep.overlap_human);
  EXPECT_GE(rep.overlap_model, 0.0);
  EXPECT_LE(rep.overlap_human, 1.0);
}

TEST(Ablation, LengthAndYesNoConditions) {
  synthetic::PairOptions o;
  o.n_pairs = 5;
  o.length = 64;
  auto docs = synthetic::paired_corpus(o);
  docs[1].tokens[0] = "Yes";
  docs[1].tokens[1] = ",";
  const auto corpus = build_pairs(docs);
  const auto y = run_ablation(corpus, Condition::parse("yesno"), Estimator::reuse());
  EXPECT_EQ(y.counts.at("yes_model"), 1);
  EXPECT_EQ(y.counts.at("stripped_model"), 1);
  EXPECT_EQ(y.overlap_human, 1.0);
  const auto l = run_ablation(corpus, Condition::parse("length:32"), Estimator::reuse());
  EXPECT_EQ(l.counts.at("truncated_human"), 5);
  EXPECT_LT(l.overlap_human, 1.0);
  EXPECT_THROW(run_ablation(corpus, Condition::parse("mask:NOUN:mean"), Estimator::reuse()), Error);
}

TEST(Ablation, RescoreWithNgram) {
  auto model = std::make_shared<const ngram::Model>(
      ngram::Model::train({"yes , the cell divides .", "no , it does not ."}, {1, 0.1}));
  std::vector<ScoredDocument> docs;
  for (int i = 0; i < 3; ++i) {
    for (int role = 0; role < 2; ++role) {
      ScoredDocument d;
      d.pair_key = "p" + std::to_string(i);
      d.id = d.pair_key + (role ? ".m" : ".h");
      d.source = role ? Source::kModel : Source::kHuman;
      d.tokens = ngram::tokenize(role ? "Yes, the cell does not divide. It does." : "The cell divides. No it does not.");
      d.nll.assign(d.tokens.size(), 0.0);
      docs.push_back(model->score_document(d));
    }
  }
  const auto rep = run_ablation(build_pairs(docs), Condition::parse("yesno"),
                                Estimator::rescore(model), 16);
  EXPECT_EQ(rep.counts.at("stripped_model"), 3);
  EXPECT_EQ(rep.overlap_human, 1.0);
  EXPECT_LT(rep.overlap_model, 1.0);
  EXPECT_EQ(rep.estimator.substr(0, 6), "ngram:");
}

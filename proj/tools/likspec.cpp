#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "likspec/analysis.hpp"
#include "likspec/error.hpp"
#include "likspec/features.hpp"
#include "likspec/harness.hpp"
#include "likspec/io.hpp"
#include "likspec/ngram.hpp"
#include "likspec/pairwise.hpp"
#include "likspec/plots.hpp"
#include "likspec/scores.hpp"
#include "likspec/spectrum.hpp"
#include "likspec/supervised.hpp"
#include "likspec/synthetic.hpp"

using namespace likspec;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = io::parse_int(item);
    if (v < 0) throw Error(ErrorCode::kInvalidArgument, "seeds must be non-negative");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "empty seed list");
  return seeds;
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    io::write_file(out, text);
  }
}

// "human" for <key>.human ids, "model" for any other role suffix.
std::string role_of(const std::string& id) {
  const auto dot = id.rfind('.');
  if (dot == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "doc id '" + id + "' has no role suffix");
  }
  return id.substr(dot + 1) == "human" ? "human" : "model";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood spectrum analysis of human and model text"};
  app.set_version_flag("--version", std::string(harness::kVersion));
  app.require_subcommand(1);

  // train-ngram
  auto* train_ngram = app.add_subcommand("train-ngram", "Train an add-k bigram model");
  std::string tn_corpus, tn_out;
  ngram::Model::Options tn_opts;
  train_ngram->add_option("--corpus", tn_corpus, "one sentence per line")->required();
  train_ngram->add_option("--min-count", tn_opts.min_count)->capture_default_str();
  train_ngram->add_option("--k", tn_opts.k, "add-k smoothing constant")->capture_default_str();
  train_ngram->add_option("--out", tn_out)->required();

  // score
  auto* score = app.add_subcommand("score", "Validate a scores file, or score raw texts");
  std::string sc_validate, sc_texts, sc_model, sc_out;
  score->add_option("--validate", sc_validate, "scores JSONL to check");
  score->add_option("--texts", sc_texts, "raw text JSONL");
  score->add_option("--model", sc_model, "bigram model JSON");
  score->add_option("--out", sc_out, "scores JSONL output");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "Per-document magnitude spectra");
  std::string sp_scores, sp_out, sp_mode = "plain";
  spectrum->add_option("--scores", sp_scores)->required();
  spectrum->add_option("--mode", sp_mode, "plain|circular_mag|circular_complex")->capture_default_str();
  spectrum->add_option("--out", sp_out)->required();

  // features
  auto* features = app.add_subcommand("features", "Fixed-length spectral feature table");
  std::string ft_scores, ft_out, ft_mode = "plain";
  std::size_t ft_grid = 500;
  features->add_option("--scores", ft_scores)->required();
  features->add_option("--mode", ft_mode)->capture_default_str();
  features->add_option("--grid-size", ft_grid)->capture_default_str();
  features->add_option("--out", ft_out)->required();

  // train-clf
  auto* train_clf = app.add_subcommand("train-clf", "Grid search with stratified k-fold CV");
  std::string tc_features, tc_grid = "reference", tc_report, tc_model;
  int tc_folds = 5;
  std::uint64_t tc_seed = 0;
  ml::SolverOptions tc_solver;
  train_clf->add_option("--features", tc_features)->required();
  train_clf->add_option("--grid", tc_grid, "grid JSON or 'reference'")->capture_default_str();
  train_clf->add_option("--folds", tc_folds)->capture_default_str();
  train_clf->add_option("--seed", tc_seed)->capture_default_str();
  train_clf->add_option("--tol", tc_solver.tol)->capture_default_str();
  train_clf->add_option("--max-iter", tc_solver.max_iter)->capture_default_str();
  train_clf->add_option("--report", tc_report)->required();
  train_clf->add_option("--model", tc_model, "refit the best config on all rows and save it");

  // detect-pair
  auto* detect = app.add_subcommand("detect-pair", "Pair-wise low-frequency heuristic");
  std::string dp_spectra, dp_pairs = "inferred", dp_report, dp_direction, dp_seeds = "0,1,2,3,4,5,6,7,8,9";
  std::size_t dp_kmax = 30;
  std::optional<std::size_t> dp_delta;
  double dp_epsilon = 0.0;
  detect->add_option("--spectra", dp_spectra)->required();
  detect->add_option("--pairs", dp_pairs, "pairs CSV or 'inferred'")->capture_default_str();
  detect->add_option("--k-max", dp_kmax)->capture_default_str();
  detect->add_option("--delta-k", dp_delta, "fix delta_k instead of taking the sweep's best");
  detect->add_option("--direction", dp_direction, "model_higher|human_higher (calibrated if omitted)");
  detect->add_option("--epsilon", dp_epsilon)->capture_default_str();
  detect->add_option("--heldout-seeds", dp_seeds)->capture_default_str();
  detect->add_option("--report", dp_report)->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Ablation: yes/no strip, truncation, POS masking");
  std::string an_corpus, an_condition, an_estimator = "reuse", an_report;
  std::uint64_t an_seed = 0;
  std::size_t an_grid = 64;
  analyze->add_option("--corpus", an_corpus)->required();
  analyze->add_option("--condition", an_condition, "yesno|length:<n>|mask:<TAGS>:<mean|random>")
      ->required();
  analyze->add_option("--estimator", an_estimator, "reuse|ngram:<model-path>")->capture_default_str();
  analyze->add_option("--seed", an_seed)->capture_default_str();
  analyze->add_option("--grid-size", an_grid)->capture_default_str();
  analyze->add_option("--report", an_report)->required();

  // plot
  auto* plot = app.add_subcommand("plot", "Group mean spectra with bootstrap bands");
  std::string pl_spectra, pl_groups = "role", pl_corpus, pl_out, pl_title;
  std::size_t pl_bins = 64;
  plots::CurveOptions pl_opts;
  plot->add_option("--spectra", pl_spectra)->required();
  plot->add_option("--groups", pl_groups, "role|source|model_name")->capture_default_str();
  plot->add_option("--corpus", pl_corpus, "scores JSONL; needed for source/model_name");
  plot->add_option("--bins", pl_bins)->capture_default_str();
  plot->add_option("--bootstrap", pl_opts.resamples)->capture_default_str();
  plot->add_option("--level", pl_opts.level)->capture_default_str();
  plot->add_option("--seed", pl_opts.seed)->capture_default_str();
  plot->add_option("--span", pl_opts.span, "LOESS span; no smoothing if omitted");
  plot->add_option("--title", pl_title);
  plot->add_option("--out", pl_out, ".csv or .svg")->required();

  // run / report / verify
  auto* run = app.add_subcommand("run", "Execute a run config end to end");
  std::string run_config, run_out;
  run->add_option("--config", run_config)->required();
  run->add_option("--out", run_out, "run directory")->required();

  auto* report = app.add_subcommand("report", "Comparison table over run directories");
  std::vector<std::string> rp_runs;
  std::string rp_format = "markdown", rp_out;
  report->add_option("runs", rp_runs)->required();
  report->add_option("--format", rp_format, "markdown|csv")->capture_default_str();
  report->add_option("--out", rp_out);

  auto* verify = app.add_subcommand("verify", "Re-hash a run directory against its manifest");
  std::string vf_run;
  verify->add_option("run", vf_run)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Synthetic paired scores for demos and tests");
  synthetic::PairOptions sy_opts;
  std::string sy_out;
  synth->add_option("--pairs", sy_opts.n_pairs)->capture_default_str();
  synth->add_option("--length", sy_opts.length)->capture_default_str();
  synth->add_option("--boosted-bins", sy_opts.boosted_bins)->capture_default_str();
  synth->add_option("--boost", sy_opts.boost)->capture_default_str();
  synth->add_option("--seed", sy_opts.seed)->capture_default_str();
  synth->add_flag("--annotate", sy_opts.annotate, "attach POS tags");
  synth->add_option("--out", sy_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train_ngram) {
      auto m = ngram::Model::train_file(tn_corpus, tn_opts);
      m.save(tn_out);
      std::printf("vocab %zu, tokens %lld -> %s\n", m.vocab_size(), m.total_tokens(), tn_out.c_str());
    } else if (*score) {
      if (!sc_validate.empty()) {
        const auto docs = load_scores(sc_validate);
        const auto corpus = build_pairs(docs);
        std::printf("ok: %zu documents, %zu pairs, %zu incomplete keys\n", docs.size(),
                    corpus.pairs.size(), corpus.incomplete_keys.size());
      } else {
        if (sc_texts.empty() || sc_model.empty() || sc_out.empty()) {
          throw Error(ErrorCode::kInvalidArgument,
                      "score needs --validate, or --texts, --model and --out");
        }
        const auto docs = harness::score_texts(sc_texts, sc_model);
        save_scores(sc_out, docs);
        std::printf("scored %zu documents -> %s\n", docs.size(), sc_out.c_str());
      }
    } else if (*spectrum) {
      const auto mode = parse_feature_mode(sp_mode);
      std::vector<Spectrum> out;
      for (const auto& d : load_scores(sp_scores)) out.push_back(average_spectrum(zscore(d), mode));
      save_spectra(sp_out, out);
    } else if (*features) {
      const auto mode = parse_feature_mode(ft_mode);
      FeatureTable t;
      for (const auto& d : load_scores(ft_scores)) {
        auto fv = build_features(d, mode, ft_grid);
        t.ids.push_back(fv.doc_id);
        t.rows.push_back(std::move(fv.values));
        t.labels.push_back(d.source == Source::kModel ? 1 : 0);
      }
      save_features(ft_out, t);
    } else if (*train_clf) {
      const auto t = load_features(tc_features);
      const auto grid = tc_grid == "reference" ? ml::GridSpec::reference() : ml::GridSpec::load(tc_grid);
      const auto x = ml::Matrix::from_rows(t.rows);
      const auto rep = ml::cross_validate(x, t.labels, grid, tc_folds, tc_seed, tc_solver);
      io::write_file(tc_report, rep.to_json());
      std::printf("best %s: mean accuracy %.4f\n", rep.best_config.describe().c_str(),
                  rep.mean_accuracy);
      if (!tc_model.empty()) {
        ml::Pipeline p(rep.best_config, tc_solver);
        p.fit(x, t.labels);
        p.save(tc_model);
      }
    } else if (*detect) {
      const auto spectra = load_spectra(dp_spectra);
      const auto pairs = dp_pairs == "inferred"
                             ? pairwise::infer_pairs(spectra)
                             : pairwise::pairs_from_csv(io::read_file(dp_pairs), spectra);
      const auto sweep = pairwise::sweep_delta(pairs, dp_kmax, dp_epsilon);
      std::optional<pairwise::HeldOutResult> held;
      if (pairs.size() >= 2) {
        held = pairwise::held_out_evaluation(pairs, dp_kmax, dp_epsilon, parse_seed_list(dp_seeds));
      }
      pairwise::HeuristicConfig applied{sweep.best.delta_k, dp_epsilon, sweep.best.direction};
      if (dp_delta) {
        applied = pairwise::calibrate_direction(pairs, *dp_delta, dp_epsilon);
      }
      if (!dp_direction.empty()) applied.direction = pairwise::parse_direction(dp_direction);
      io::write_file(dp_report, pairwise::report_json(sweep, held ? &*held : nullptr, applied,
                                                      pairwise::classify_all(pairs, applied)));
      std::printf("pairs %zu, best delta_k %zu (%s) accuracy %.4f\n", pairs.size(),
                  sweep.best.delta_k, pairwise::to_string(sweep.best.direction),
                  sweep.best.accuracy);
    } else if (*analyze) {
      const auto corpus = build_pairs(load_scores(an_corpus));
      const auto condition = analysis::Condition::parse(an_condition, an_seed);
      analysis::Estimator est = analysis::Estimator::reuse();
      if (an_estimator.rfind("ngram:", 0) == 0) {
        est = analysis::Estimator::rescore(
            std::make_shared<const ngram::Model>(ngram::Model::load(an_estimator.substr(6))));
      } else if (an_estimator != "reuse") {
        throw Error(ErrorCode::kInvalidArgument, "unknown estimator '" + an_estimator + "'");
      }
      const auto rep = analysis::run_ablation(corpus, condition, est, an_grid);
      io::write_file(an_report, rep.to_json());
      std::printf("overlap human %.6f, model %.6f\n", rep.overlap_human, rep.overlap_model);
    } else if (*plot) {
      std::map<std::string, std::string> field;
      if (!pl_corpus.empty()) {
        for (const auto& d : load_scores(pl_corpus)) {
          field[d.id] = pl_groups == "source"       ? to_string(d.source)
                        : pl_groups == "model_name" ? (d.source == Source::kHuman ? "human" : d.model_name)
                                                    : role_of(d.id);
        }
      } else if (pl_groups != "role") {
        throw Error(ErrorCode::kInvalidArgument, "--groups " + pl_groups + " needs --corpus");
      }
      if (pl_groups != "role" && pl_groups != "source" && pl_groups != "model_name") {
        throw Error(ErrorCode::kInvalidArgument, "unknown group field '" + pl_groups + "'");
      }
      std::map<std::string, std::vector<Spectrum>> groups;
      for (const auto& s : load_spectra(pl_spectra)) {
        std::string key;
        if (pl_corpus.empty()) {
          key = role_of(s.doc_id);
        } else {
          const auto it = field.find(s.doc_id);
          if (it == field.end()) {
            throw Error(ErrorCode::kInvalidArgument, "spectrum '" + s.doc_id + "' not in corpus");
          }
          key = it->second;
        }
        groups[key].push_back(to_spectrum(resample(s, pl_bins)));
      }
      const auto curves = plots::build_curves(groups, pl_opts);
      plots::emit(curves, pl_out, pl_title);
    } else if (*run) {
      const auto cfg = harness::RunConfig::load(run_config);
      const auto r = harness::run_pipeline(cfg, run_out);
      for (const auto& f : r.files) std::printf("%s\n", (r.run_dir / f).string().c_str());
    } else if (*report) {
      std::vector<harness::RunSummary> rows;
      for (const auto& d : rp_runs) rows.push_back(harness::load_summary(d));
      if (rp_format != "markdown" && rp_format != "csv") {
        throw Error(ErrorCode::kInvalidArgument, "unknown format '" + rp_format + "'");
      }
      write_or_print(rp_out, harness::compare_table(
                                 rows, rp_format == "csv" ? harness::TableFormat::kCsv
                                                          : harness::TableFormat::kMarkdown));
    } else if (*verify) {
      const auto bad = harness::verify_manifest(vf_run);
      for (const auto& f : bad) std::fprintf(stderr, "mismatch: %s\n", f.c_str());
      if (!bad.empty()) return 1;
      std::printf("ok\n");
    } else if (*synth) {
      save_scores(sy_out, synthetic::paired_corpus(sy_opts));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_status();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

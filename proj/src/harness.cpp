#include "likspec/harness.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/io.hpp"
#include "likspec/ngram.hpp"
#include "likspec/pairwise.hpp"
#include "likspec/spectrum.hpp"

namespace likspec::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifest = "manifest.json";

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorCode::kConfig, what + " not found: " + p.string());
  }
}

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ParseError& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kNumeric, "sha256 failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) {
    s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return s.str();
}

RunConfig RunConfig::parse(std::string_view text, const fs::path& base_dir) {
  RunConfig c;
  c.source_text = std::string(text);
  try {
    const auto j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    if (j.contains("labels")) {
      const auto& l = j.at("labels");
      c.dataset = l.value("dataset", c.dataset);
      c.generator = l.value("generator", c.generator);
      c.estimator = l.value("estimator", c.estimator);
    }
    const auto& in = j.at("input");
    if (in.contains("scores")) c.scores = resolve(base_dir, in.at("scores").get<std::string>());
    if (in.contains("texts")) c.texts = resolve(base_dir, in.at("texts").get<std::string>());
    if (in.contains("ngram_model")) {
      c.ngram_model = resolve(base_dir, in.at("ngram_model").get<std::string>());
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      c.feature_mode = parse_feature_mode(f.value("mode", std::string("plain")));
      c.grid_size = f.value("grid_size", c.grid_size);
    }
    if (j.contains("supervised")) {
      const auto& s = j.at("supervised");
      c.supervised = s.value("enabled", c.supervised);
      c.folds = s.value("folds", c.folds);
      c.cv_seed = s.value("seed", c.cv_seed);
      if (s.contains("grid")) {
        const auto& g = s.at("grid");
        if (g.is_string() && g.get<std::string>() == "reference") {
          c.grid = ml::GridSpec::reference();
        } else if (g.is_string()) {
          const auto p = resolve(base_dir, g.get<std::string>());
          require_file(p, "grid file");
          c.grid = ml::GridSpec::load(p);
        } else {
          c.grid = ml::GridSpec::from_json(g.dump());
        }
      }
    }
    if (j.contains("pairwise")) {
      const auto& p = j.at("pairwise");
      c.k_max = p.value("k_max", c.k_max);
      c.epsilon = p.value("epsilon", c.epsilon);
      if (p.contains("heldout_seeds")) {
        c.heldout_seeds = p.at("heldout_seeds").get<std::vector<std::uint64_t>>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("run config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("run config: ") + e.what());
  }
  if (c.scores.has_value() == c.texts.has_value()) {
    throw Error(ErrorCode::kConfig, "run config: give exactly one of input.scores, input.texts");
  }
  if (c.scores) require_file(*c.scores, "score file");
  if (c.texts) {
    require_file(*c.texts, "text file");
    if (!c.ngram_model) throw Error(ErrorCode::kConfig, "input.texts needs input.ngram_model");
    require_file(*c.ngram_model, "ngram model");
  }
  if (c.grid_size < 2) throw Error(ErrorCode::kConfig, "features.grid_size must be >= 2");
  if (c.folds < 2) throw Error(ErrorCode::kConfig, "supervised.folds must be >= 2");
  if (c.k_max < 1) throw Error(ErrorCode::kConfig, "pairwise.k_max must be >= 1");
  if (c.epsilon < 0) throw Error(ErrorCode::kConfig, "pairwise.epsilon must be >= 0");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return parse(text, path.parent_path());
}

std::vector<ScoredDocument> score_texts(const fs::path& texts, const fs::path& model_path) {
  const auto model = ngram::Model::load(model_path);
  std::vector<ScoredDocument> docs;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(io::read_file(texts))) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ScoredDocument d;
    try {
      const auto j = json::parse(line);
      d.id = j.at("id").get<std::string>();
      d.pair_key = j.at("pair_key").get<std::string>();
      d.source = parse_source(j.at("source").get<std::string>());
      d.model_name = j.value("model_name", std::string());
      d.tokens = ngram::tokenize(j.at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (d.tokens.empty()) throw ParseError(line_no, "empty document");
    d.nll = model.score_tokens(d.tokens);
    docs.push_back(std::move(d));
  }
  // Reuse the score-file validation (duplicate ids, lengths).
  return parse_scores(to_jsonl(docs));
}

RunResult run_pipeline(const RunConfig& cfg, const fs::path& run_dir) {
  RunResult result;
  result.run_dir = run_dir;
  stage("setup", [&] {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + run_dir.string());
  });
  auto write = [&](const std::string& name, const std::string& contents) {
    io::write_file(run_dir / name, contents);
    result.files.push_back(name);
  };

  const auto docs = stage("load", [&] {
    return cfg.scores ? load_scores(*cfg.scores) : score_texts(*cfg.texts, *cfg.ngram_model);
  });
  stage("load", [&] { write("scores.jsonl", to_jsonl(docs)); });

  stage("spectra", [&] {
    std::vector<Spectrum> spectra;
    for (const auto& d : docs) spectra.push_back(average_spectrum(zscore(d), cfg.feature_mode));
    write("spectra.csv", spectra_to_csv(spectra));
    return 0;
  });

  const auto table = stage("features", [&] {
    FeatureTable t;
    for (const auto& d : docs) {
      auto fv = build_features(d, cfg.feature_mode, cfg.grid_size);
      t.ids.push_back(d.id);
      t.labels.push_back(d.source == Source::kModel ? 1 : 0);
      t.rows.push_back(std::move(fv.values));
    }
    write("features.csv", features_to_csv(t));
    return t;
  });

  if (cfg.supervised) {
    stage("supervised", [&] {
      const auto x = ml::Matrix::from_rows(table.rows);
      const auto report = ml::cross_validate(x, table.labels, cfg.grid, cfg.folds, cfg.cv_seed);
      write("eval_report.json", report.to_json());
    });
  }

  stage("pairwise", [&] {
    const auto corpus = build_pairs(docs);
    std::vector<Spectrum> spectra;
    for (const auto& d : corpus.docs) spectra.push_back(magnitude_spectrum(zscore(d)));
    const auto pairs = pairwise::join_pairs(corpus, spectra);
    const auto sweep = pairwise::sweep_delta(pairs, cfg.k_max, cfg.epsilon);
    std::optional<pairwise::HeldOutResult> held;
    if (pairs.size() >= 2 && !cfg.heldout_seeds.empty()) {
      held = pairwise::held_out_evaluation(pairs, cfg.k_max, cfg.epsilon, cfg.heldout_seeds);
    }
    const pairwise::HeuristicConfig applied{sweep.best.delta_k, cfg.epsilon, sweep.best.direction};
    write("pairwise_report.json",
          pairwise::report_json(sweep, held ? &*held : nullptr, applied,
                                pairwise::classify_all(pairs, applied)));
  });

  stage("manifest", [&] {
    ojson m;
    m["format"] = "likspec.manifest";
    m["version"] = 1;
    m["likspec_version"] = kVersion;
    m["labels"] = {{"dataset", cfg.dataset},
                   {"generator", cfg.generator},
                   {"estimator", cfg.estimator}};
    m["config_sha256"] = sha256_hex(cfg.source_text);
    m["settings"] = {{"feature_mode", to_string(cfg.feature_mode)},
                     {"grid_size", cfg.grid_size},
                     {"supervised", cfg.supervised},
                     {"folds", cfg.folds},
                     {"k_max", cfg.k_max},
                     {"epsilon", cfg.epsilon},
                     {"solver_tol", ml::SolverOptions{}.tol},
                     {"solver_max_iter", ml::SolverOptions{}.max_iter}};
    m["seeds"] = {{"cv", cfg.cv_seed}, {"heldout", cfg.heldout_seeds}};
    ojson files = ojson::object();
    for (const auto& f : result.files) files[f] = sha256_hex(io::read_file(run_dir / f));
    m["files"] = std::move(files);
    io::write_file(run_dir / kManifest, m.dump(1) + "\n");
    result.files.push_back(kManifest);
  });
  return result;
}

std::vector<std::string> verify_manifest(const fs::path& run_dir) {
  json m;
  try {
    m = json::parse(io::read_file(run_dir / kManifest));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  std::vector<std::string> bad;
  for (const auto& [name, hash] : m.at("files").items()) {
    const auto p = run_dir / name;
    if (!fs::is_regular_file(p) || sha256_hex(io::read_file(p)) != hash.get<std::string>()) {
      bad.push_back(name);
    }
  }
  return bad;
}

RunSummary load_summary(const fs::path& run_dir) {
  RunSummary s;
  try {
    const auto m = json::parse(io::read_file(run_dir / kManifest));
    s.dataset = m.at("labels").at("dataset").get<std::string>();
    s.generator = m.at("labels").at("generator").get<std::string>();
    s.estimator = m.at("labels").at("estimator").get<std::string>();
    const auto p = json::parse(io::read_file(run_dir / "pairwise_report.json"));
    s.accuracy = p.at("best").at("accuracy").get<double>();
    s.delta_k = p.at("best").at("delta_k").get<std::size_t>();
    if (fs::is_regular_file(run_dir / "eval_report.json")) {
      const auto e = json::parse(io::read_file(run_dir / "eval_report.json"));
      s.supervised_accuracy = e.at("mean_accuracy").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, run_dir.string() + ": " + e.what());
  }
  return s;
}

std::string compare_table(std::vector<RunSummary> runs, TableFormat format) {
  std::stable_sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.generator != b.generator) return a.generator < b.generator;
    return a.accuracy > b.accuracy;
  });
  auto fixed4 = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  std::string out;
  if (format == TableFormat::kCsv) {
    out = "dataset,generator,accuracy,delta_k,estimator,supervised_accuracy\n";
    for (const auto& r : runs) {
      out += r.dataset + "," + r.generator + "," + fixed4(r.accuracy) + "," +
             std::to_string(r.delta_k) + "," + r.estimator + "," +
             (r.supervised_accuracy ? fixed4(*r.supervised_accuracy) : "") + "\n";
    }
  } else {
    out = "| Dataset | Gen. model | Accuracy | delta_k | Estimator | Supervised acc. |\n"
          "|---|---|---|---|---|---|\n";
    for (const auto& r : runs) {
      out += "| " + r.dataset + " | " + r.generator + " | " + fixed4(r.accuracy) + " | " +
             std::to_string(r.delta_k) + " | " + r.estimator + " | " +
             (r.supervised_accuracy ? fixed4(*r.supervised_accuracy) : "-") + " |\n";
    }
  }
  return out;
}

}  // namespace likspec::harness

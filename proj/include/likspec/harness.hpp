#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "likspec/features.hpp"
#include "likspec/supervised.hpp"

namespace likspec::harness {

inline constexpr std::string_view kVersion = "0.1.0";

// Declarative description of one run. Parsed from JSON (comments allowed);
// relative paths resolve against the config file's directory.
struct RunConfig {
  std::string dataset = "unnamed";
  std::string generator = "unknown";
  std::string estimator = "given";

  std::optional<std::filesystem::path> scores;       // scored JSONL input
  std::optional<std::filesystem::path> texts;        // raw text JSONL input
  std::optional<std::filesystem::path> ngram_model;  // required with texts

  FeatureMode feature_mode = FeatureMode::kPlain;
  std::size_t grid_size = 500;

  bool supervised = true;
  int folds = 5;
  std::uint64_t cv_seed = 0;
  ml::GridSpec grid = ml::GridSpec::reference();

  std::size_t k_max = 30;
  double epsilon = 0.0;
  std::vector<std::uint64_t> heldout_seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  std::string source_text;  // raw config bytes, hashed into the manifest

  // Throws Error(kConfig) for schema problems or missing input files.
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
};

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<std::string> files;  // written, relative to run_dir
};

// Stages: load -> spectra -> features -> supervised -> pairwise -> manifest.
// Errors are rethrown with the stage name prefixed.
RunResult run_pipeline(const RunConfig& config, const std::filesystem::path& run_dir);

std::string sha256_hex(std::string_view data);

// Files whose hash no longer matches the manifest (missing files included).
std::vector<std::string> verify_manifest(const std::filesystem::path& run_dir);

struct RunSummary {
  std::string dataset;
  std::string generator;
  std::string estimator;
  double accuracy = 0.0;
  std::size_t delta_k = 0;
  std::optional<double> supervised_accuracy;
};

RunSummary load_summary(const std::filesystem::path& run_dir);

enum class TableFormat { kMarkdown, kCsv };

// Rows grouped by dataset and generator, best accuracy first.
std::string compare_table(std::vector<RunSummary> runs, TableFormat format);

// Raw text JSONL records {id, pair_key, source, model_name, text} scored
// with the bigram model.
std::vector<ScoredDocument> score_texts(const std::filesystem::path& texts,
                                        const std::filesystem::path& model_path);

}  // namespace likspec::harness

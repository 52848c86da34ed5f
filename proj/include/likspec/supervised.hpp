#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace likspec::ml {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix select_rows(std::span<const std::size_t> idx) const;
  Matrix select_cols(std::span<const std::size_t> idx) const;
};

enum class ScalerKind { kMinMax, kZScore, kRobust };
enum class ClassifierKind { kLogReg, kKnn, kNaiveBayes, kLinearSvm };
enum class Penalty { kL1, kL2 };

const char* to_string(ScalerKind k);
const char* to_string(ClassifierKind k);
const char* to_string(Penalty p);
ScalerKind parse_scaler(std::string_view s);
ClassifierKind parse_classifier(std::string_view s);
Penalty parse_penalty(std::string_view s);

struct ClassifierParams {
  ClassifierKind kind = ClassifierKind::kLinearSvm;
  double c = 1.0;                 // logreg, linear_svm
  Penalty penalty = Penalty::kL2;  // logreg
  int n_neighbors = 5;            // knn
  double alpha = 1.0;             // naive_bayes (complement NB smoothing)

  std::string describe() const;
};

struct PipelineConfig {
  ScalerKind scaler = ScalerKind::kMinMax;
  std::size_t k_best = 50;
  ClassifierParams classifier;

  std::string describe() const;
};

// Logistic solvers stop once the gradient (or minimum-norm subgradient)
// norm falls to tol times its value at w = 0; the SVM stops when the spread
// of projected dual gradients falls below tol. max_iter caps outer passes.
struct SolverOptions {
  double tol = 1e-4;
  int max_iter = 1000;
};

struct FitDiagnostics {
  int iterations = 0;
  bool converged = true;
  double final_measure = 0.0;
};

// Per-feature affine scaler fitted on training rows: (x - offset) / scale.
struct Scaler {
  ScalerKind kind = ScalerKind::kMinMax;
  std::vector<double> offset;
  std::vector<double> scale;

  static Scaler fit(ScalerKind kind, const Matrix& x);
  Matrix transform(const Matrix& x) const;
};

// One-way ANOVA F statistic per column for a binary label vector.
std::vector<double> anova_f(const Matrix& x, std::span<const int> y);

// Indices of the k largest scores (ties to the lower index), ascending.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

// scaler -> k-best selection -> classifier. Labels are 0 (human) and 1
// (model). Decision ties resolve to label 0.
class Pipeline {
 public:
  Pipeline() = default;
  explicit Pipeline(PipelineConfig cfg, SolverOptions opts = {})
      : config_(cfg), solver_(opts) {}

  const PipelineConfig& config() const { return config_; }
  const SolverOptions& solver() const { return solver_; }
  bool fitted() const { return fitted_; }
  const FitDiagnostics& diagnostics() const { return diag_; }
  const std::vector<std::size_t>& selected() const { return selected_; }
  const Scaler& scaler() const { return scaler_; }

  // Throws kInvalidArgument on bad shapes, NaN, or k_best > columns, and
  // kTraining when a class has fewer than two samples.
  Pipeline& fit(const Matrix& x, std::span<const int> y);

  // Real-valued decision score per row; > 0 means label 1.
  std::vector<double> decision(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;

  std::string to_json() const;
  static Pipeline from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Pipeline load(const std::filesystem::path& path);

 private:
  PipelineConfig config_;
  SolverOptions solver_;
  bool fitted_ = false;
  FitDiagnostics diag_;
  Scaler scaler_;
  std::vector<std::size_t> selected_;
  std::size_t n_features_ = 0;
  // linear models: weights over selected features plus trailing bias
  std::vector<double> weights_;
  // complement naive bayes
  std::vector<double> nb_shift_;
  std::vector<double> nb_log_theta_[2];
  // knn
  Matrix knn_x_;
  std::vector<int> knn_y_;
};

struct GridSpec {
  std::vector<ScalerKind> scalers;
  std::vector<std::size_t> k_best;
  std::vector<ClassifierParams> classifiers;

  // scaler x k_best x classifiers, in that nesting order.
  std::vector<PipelineConfig> expand() const;

  // Scalers, KBestFeatures, and the linear SVM / LR / KNN / complement NB
  // settings of the reference hyperparameter grid.
  static GridSpec reference();
  static GridSpec from_json(std::string_view text);
  static GridSpec load(const std::filesystem::path& path);
  std::string to_json() const;
};

struct GridResult {
  PipelineConfig config;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct EvalReport {
  std::vector<double> per_fold_accuracy;  // of the best config
  double mean_accuracy = 0.0;
  PipelineConfig best_config;
  std::vector<GridResult> grid_results;
  int folds = 5;
  std::uint64_t seed = 0;
  SolverOptions solver;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;

  std::string to_json() const;
};

// Stratified fold assignment: each class is shuffled with the seeded RNG and
// dealt round-robin over the folds. Returns fold index per sample.
std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed);

// k_best values above the feature dimension are clamped to it (duplicates
// after clamping are dropped). Best config = highest mean accuracy, ties to
// the earliest config in grid order.
EvalReport cross_validate(const Matrix& x, std::span<const int> y, const GridSpec& grid,
                          int folds, std::uint64_t seed, SolverOptions opts = {});

double accuracy(std::span<const int> truth, std::span<const int> pred);

}  // namespace likspec::ml

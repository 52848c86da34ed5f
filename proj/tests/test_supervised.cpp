#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/rng.hpp"
#include "likspec/supervised.hpp"
#include "likspec/synthetic.hpp"

using namespace likspec;
using namespace likspec::ml;

namespace {

Matrix two_feature_set() {
  return Matrix::from_rows({{0.5, 1.0}, {1.5, -0.5}, {-1.0, 0.3}, {2.0, 2.0},
                            {0.1, -1.2}, {-0.7, -0.4}, {1.1, 0.9}, {-1.5, 1.0}});
}
const std::vector<int> kTwoFeatureLabels = {1, 1, 0, 1, 0, 0, 1, 0};
Matrix two_feature_test() { return Matrix::from_rows({{0.0, 0.0}, {1.0, -1.0}, {-0.5, 2.0}}); }

// Class 0 is rows 0..5, class 1 rows 6..11. Features 1 and 2 separate the
// classes by ~5 units with within-class spread ~0.15; feature 3 is noise.
Matrix anova_set() {
  const double x1[] = {0.0, 0.2, -0.1, 0.1, -0.2, 0.0, 5.0, 5.1, 4.9, 5.2, 4.8, 5.0};
  const double x2[] = {1.0, 1.1, 0.9, 1.0, 1.2, 0.8, -4.0, -4.1, -3.9, -4.2, -3.8, -4.0};
  const double x3[] = {0.3, -0.5, 0.8, -0.2, 0.1, -0.6, 0.4, -0.3, 0.7, -0.1, 0.0, -0.5};
  Matrix m(12, 3);
  for (std::size_t i = 0; i < 12; ++i) {
    m(i, 0) = x1[i];
    m(i, 1) = x2[i];
    m(i, 2) = x3[i];
  }
  return m;
}
const std::vector<int> kAnovaLabels = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};

PipelineConfig config(ScalerKind s, std::size_t k, ClassifierParams c) { return {s, k, c}; }

ClassifierParams logreg(Penalty pen, double c) {
  ClassifierParams p;
  p.kind = ClassifierKind::kLogReg;
  p.penalty = pen;
  p.c = c;
  return p;
}
ClassifierParams svm(double c) {
  ClassifierParams p;
  p.kind = ClassifierKind::kLinearSvm;
  p.c = c;
  return p;
}
ClassifierParams knn(int n) {
  ClassifierParams p;
  p.kind = ClassifierKind::kKnn;
  p.n_neighbors = n;
  return p;
}
ClassifierParams nb(double alpha) {
  ClassifierParams p;
  p.kind = ClassifierKind::kNaiveBayes;
  p.alpha = alpha;
  return p;
}

std::vector<ClassifierParams> all_classifiers() {
  return {logreg(Penalty::kL2, 1), logreg(Penalty::kL1, 1), svm(1), knn(3), nb(1)};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kNumeric;
}

}  // namespace

TEST(Scaler, MinMaxUnitRangeOnTraining) {
  Rng rng(1);
  Matrix x(40, 5);
  for (auto& v : x.data) v = rng.normal() * 7 + 3;
  const auto t = Scaler::fit(ScalerKind::kMinMax, x).transform(x);
  for (std::size_t j = 0; j < 5; ++j) {
    double mn = 1e9, mx = -1e9;
    for (std::size_t i = 0; i < 40; ++i) {
      mn = std::min(mn, t(i, j));
      mx = std::max(mx, t(i, j));
    }
    EXPECT_NEAR(mn, 0.0, 1e-15);
    EXPECT_NEAR(mx, 1.0, 1e-15);
  }
}

TEST(Scaler, ZScorePopulationStd) {
  const auto x = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}});
  const auto s = Scaler::fit(ScalerKind::kZScore, x);
  EXPECT_DOUBLE_EQ(s.offset[0], 2.5);
  EXPECT_DOUBLE_EQ(s.scale[0], std::sqrt(1.25));
}

TEST(Scaler, RobustMedianIqr) {
  const auto x = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}, {100.0}});
  const auto s = Scaler::fit(ScalerKind::kRobust, x);
  EXPECT_DOUBLE_EQ(s.offset[0], 3.0);
  EXPECT_DOUBLE_EQ(s.scale[0], 2.0);  // 4 - 2 with linear interpolation
  // corrupting the maximum (not a quartile order statistic) changes nothing
  const auto y = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}, {1e9}});
  const auto t = Scaler::fit(ScalerKind::kRobust, y);
  EXPECT_EQ(t.offset, s.offset);
  EXPECT_EQ(t.scale, s.scale);
}

TEST(Scaler, ConstantColumnScaleOne) {
  const auto x = Matrix::from_rows({{5.0, 1.0}, {5.0, 2.0}});
  for (auto k : {ScalerKind::kMinMax, ScalerKind::kZScore, ScalerKind::kRobust}) {
    EXPECT_EQ(Scaler::fit(k, x).scale[0], 1.0);
  }
}

TEST(Anova, TwelvePointDataset) {
  const auto f = anova_f(anova_set(), kAnovaLabels);
  // scipy.stats.f_oneway on the same columns
  EXPECT_NEAR(f[0], 3749.999999999947, 1e-7);
  EXPECT_NEAR(f[1], 3750.0000000002133, 1e-7);
  EXPECT_NEAR(f[2], 0.031490552834149727, 1e-12);
  EXPECT_EQ(top_k(f, 2), (std::vector<std::size_t>{0, 1}));
  Pipeline p(config(ScalerKind::kZScore, 2, svm(1)));
  p.fit(anova_set(), kAnovaLabels);
  EXPECT_EQ(p.selected(), (std::vector<std::size_t>{0, 1}));
}

TEST(Anova, TopKTiesToLowerIndex) {
  const std::vector<double> s = {1.0, 3.0, 3.0, 2.0, 3.0};
  EXPECT_EQ(top_k(s, 2), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(top_k(s, 4), (std::vector<std::size_t>{1, 2, 3, 4}));
}

TEST(Solvers, LogRegL2MatchesReference) {
  Pipeline p(config(ScalerKind::kMinMax, 2, logreg(Penalty::kL2, 1.0)), {1e-10, 10000});
  p.fit(two_feature_set(), kTwoFeatureLabels);
  const auto d = p.decision(two_feature_test());
  // sklearn LogisticRegression(solver="liblinear") on min-max scaled inputs
  const double ref[] = {0.09342179216380697, 0.2268789889293339, 0.16932359322949286};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], ref[i], 1e-7);
  EXPECT_TRUE(p.diagnostics().converged);
}

TEST(Solvers, LogRegL1MatchesReference) {
  Pipeline p(config(ScalerKind::kMinMax, 2, logreg(Penalty::kL1, 1.0)), {1e-10, 10000});
  p.fit(two_feature_set(), kTwoFeatureLabels);
  const auto d = p.decision(two_feature_test());
  const double ref[] = {0.10185218659596358, 0.16975364432660597, 0.06790145773064239};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], ref[i], 1e-6);
}

TEST(Solvers, LinearSvmMatchesReference) {
  Pipeline p(config(ScalerKind::kMinMax, 2, svm(1.0)), {1e-10, 100000});
  p.fit(two_feature_set(), kTwoFeatureLabels);
  const auto d = p.decision(two_feature_test());
  // sklearn LinearSVC(loss="hinge", dual=True)
  const double ref[] = {-0.06476403061224478, 0.2656090561224489, -0.07844387755102022};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d[i], ref[i], 1e-6);
}

TEST(Solvers, ComplementNbMatchesReference) {
  const auto x = Matrix::from_rows(
      {{0, 3, 1}, {1, 4, 0}, {0, 5, 2}, {4, 0, 1}, {5, 1, 0}, {3, 0, 3}});
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const auto t = Matrix::from_rows({{2, 2, 1}, {0, 6, 0}, {6, 0, 1}, {1, 1, 1}, {3, 2, 2}, {2, 3, 0}});
  // sklearn ComplementNB on min-max scaled inputs: jll[1] - jll[0]
  const std::vector<std::pair<double, std::vector<double>>> ref = {
      {0.5, {-0.004863684848853023, -1.7816375524145847, 1.6754742205028088,
             0.020461226916877573, 0.31253713413712214, -0.3475894156005588}},
      {1.0, {-0.004456962265267261, -1.3088699086019326, 1.2255792679258126,
             0.015251457337445595, 0.22893947983916685, -0.2575618239724149}},
      {2.0, {-0.003563901999444008, -0.8727362243152846, 0.8145595121247071,
             0.01008930054833923, 0.15198143593477598, -0.17276244248144756}}};
  for (const auto& [alpha, expect] : ref) {
    Pipeline p(config(ScalerKind::kMinMax, 3, nb(alpha)));
    p.fit(x, y);
    const auto d = p.decision(t);
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(d[i], expect[i], 1e-12);
    EXPECT_EQ(p.predict(t), (std::vector<int>{0, 0, 1, 1, 1, 0}));
  }
}

TEST(Fit, SeparatedClustersAllClassifiers) {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  Rng rng(2);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    // two mirrored features: complement NB cannot separate on a single one
    const double s = (label ? 1.0 : -1.0);
    rows.push_back({s + 0.1 * rng.normal(), -s + 0.1 * rng.normal()});
    y.push_back(label);
  }
  const auto x = Matrix::from_rows(rows);
  for (auto scaler : {ScalerKind::kMinMax, ScalerKind::kZScore, ScalerKind::kRobust}) {
    for (const auto& c : all_classifiers()) {
      Pipeline p(config(scaler, 2, c));
      p.fit(x, y);
      EXPECT_EQ(accuracy(y, p.predict(x)), 1.0) << p.config().describe();
    }
  }
}

TEST(Fit, InputErrors) {
  const auto x = Matrix::from_rows({{1.0}, {2.0}, {3.0}, {4.0}});
  Pipeline p(config(ScalerKind::kMinMax, 1, svm(1)));
  EXPECT_EQ(code_of([&] { p.fit(x, std::vector<int>{0, 0, 0, 0}); }), ErrorCode::kTraining);
  EXPECT_EQ(code_of([&] { p.fit(x, std::vector<int>{0, 0, 0, 1}); }), ErrorCode::kTraining);
  auto bad = x;
  bad(2, 0) = NAN;
  EXPECT_EQ(code_of([&] { p.fit(bad, std::vector<int>{0, 0, 1, 1}); }), ErrorCode::kInvalidArgument);
  Pipeline wide(config(ScalerKind::kMinMax, 2, svm(1)));
  EXPECT_EQ(code_of([&] { wide.fit(x, std::vector<int>{0, 0, 1, 1}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { p.fit(x, std::vector<int>{0, 1, 2, 1}); }), ErrorCode::kInvalidArgument);
}

TEST(Predict, UnfittedFails) {
  Pipeline p(config(ScalerKind::kMinMax, 1, svm(1)));
  EXPECT_EQ(code_of([&] { p.predict(Matrix::from_rows({{1.0}})); }), ErrorCode::kNotFitted);
}

TEST(Predict, KnnSelfLabel) {
  Rng rng(3);
  Matrix x(30, 4);
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) y[i] = static_cast<int>(rng.index(2));
  y[0] = 0;
  y[1] = 1;
  Pipeline p(config(ScalerKind::kZScore, 4, knn(1)));
  p.fit(x, y);
  EXPECT_EQ(p.predict(x), y);
}

TEST(Predict, KnnDistanceTieToLowerIndex) {
  // the query is equidistant from rows 0 and 1; dyadic values keep the
  // scaled distances exact
  const auto x = Matrix::from_rows({{0.0}, {2.0}, {4.0}, {-4.0}});
  Pipeline p(config(ScalerKind::kMinMax, 1, knn(1)));
  p.fit(x, std::vector<int>{1, 0, 0, 1});
  EXPECT_EQ(p.predict(Matrix::from_rows({{1.0}}))[0], 1);
  Pipeline q(config(ScalerKind::kMinMax, 1, knn(1)));
  q.fit(x, std::vector<int>{0, 1, 0, 1});
  EXPECT_EQ(q.predict(Matrix::from_rows({{1.0}}))[0], 0);
}

TEST(Predict, BatchDuplicationInvariant) {
  Pipeline p(config(ScalerKind::kZScore, 2, logreg(Penalty::kL2, 2)));
  p.fit(two_feature_set(), kTwoFeatureLabels);
  const auto t = two_feature_test();
  auto doubled = t;
  doubled.data.insert(doubled.data.end(), t.data.begin(), t.data.end());
  doubled.rows *= 2;
  const auto a = p.decision(t), b = p.decision(doubled);
  for (std::size_t i = 0; i < t.rows; ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(a[i], b[i + t.rows]);
  }
}

TEST(Predict, BoundaryTieIsLabelZero) {
  const auto x = Matrix::from_rows({{0.0}, {1.0}, {3.0}, {4.0}});
  Pipeline fitted(config(ScalerKind::kMinMax, 1, svm(1)));
  fitted.fit(x, std::vector<int>{0, 0, 1, 1});
  auto j = nlohmann::json::parse(fitted.to_json());
  j["state"]["weights"] = {1.0, -0.5};  // boundary at scaled 0.5, raw x = 2
  const auto p = Pipeline::from_json(j.dump());
  const auto t = Matrix::from_rows({{2.0}, {2.5}, {1.5}});
  EXPECT_EQ(p.decision(t)[0], 0.0);
  EXPECT_EQ(p.predict(t), (std::vector<int>{0, 1, 0}));
}

TEST(Pipeline, JsonRoundTripPredictsIdentically) {
  const auto t = synthetic::separable_features({60, 40, 5, 2.0, 9});
  const auto x = Matrix::from_rows(t.rows);
  for (const auto& c : all_classifiers()) {
    Pipeline p(config(ScalerKind::kRobust, 10, c));
    p.fit(x, t.labels);
    const auto text = p.to_json();
    const auto back = Pipeline::from_json(text);
    EXPECT_EQ(back.decision(x), p.decision(x)) << c.describe();
    EXPECT_EQ(back.to_json(), text);
  }
  const auto path = std::filesystem::temp_directory_path() / "likspec_pipe.json";
  Pipeline p(config(ScalerKind::kMinMax, 5, svm(2)));
  p.fit(x, t.labels);
  p.save(path);
  EXPECT_EQ(Pipeline::load(path).predict(x), p.predict(x));
  std::filesystem::remove(path);
  EXPECT_THROW(Pipeline::from_json(R"({"format":"likspec.pipeline","version":2})"), Error);
}

TEST(Pipeline, NoLeakageFromTestRows) {
  const auto t = synthetic::separable_features({40, 6, 2, 2.0, 4});
  const auto x = Matrix::from_rows(t.rows);
  Pipeline p(config(ScalerKind::kMinMax, 3, svm(1)));
  p.fit(x, t.labels);
  const auto scaler_before = p.scaler().offset;
  auto outlier = Matrix::from_rows({{1e6, -1e6, 1e6, 0, 0, 0}});
  (void)p.predict(outlier);
  EXPECT_EQ(p.scaler().offset, scaler_before);
}

TEST(Folds, StratifiedAndDeterministic) {
  Rng rng(5);
  std::vector<int> y(103);
  for (auto& v : y) v = rng.uniform() < 0.3 ? 1 : 0;
  const auto f = stratified_folds(y, 5, 42);
  EXPECT_EQ(f, stratified_folds(y, 5, 42));
  EXPECT_NE(f, stratified_folds(y, 5, 43));
  double n1 = 0;
  for (int v : y) n1 += v;
  const double ratio = n1 / static_cast<double>(y.size());
  for (int fold = 0; fold < 5; ++fold) {
    double size = 0, ones = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (f[i] == fold) {
        ++size;
        ones += y[i];
      }
    }
    EXPECT_LE(std::abs(ones - ratio * size), 1.0) << fold;
  }
}

TEST(Grid, ReferenceGridShape) {
  const auto g = GridSpec::reference();
  EXPECT_EQ(g.scalers.size(), 3u);
  EXPECT_EQ(g.k_best, (std::vector<std::size_t>{50, 80, 100, 120, 150, 200, 250, 300, 400, 500}));
  // SVM C x3, LR penalty x2 x C x3, KNN x4, NB x3
  EXPECT_EQ(g.classifiers.size(), 16u);
  EXPECT_EQ(g.expand().size(), 3u * 10u * 16u);
  const auto back = GridSpec::from_json(g.to_json());
  EXPECT_EQ(back.expand().size(), g.expand().size());
  EXPECT_EQ(back.to_json(), g.to_json());
  EXPECT_THROW(GridSpec::from_json(R"({"scalers":["minmax"],"k_best":[5],"classifiers":[{"type":"mlp"}]})"),
               Error);
}

TEST(CrossValidate, DeterministicAndConsistent) {
  const auto t = synthetic::separable_features({80, 30, 4, 1.0, 3});
  const auto x = Matrix::from_rows(t.rows);
  GridSpec g;
  g.scalers = {ScalerKind::kMinMax, ScalerKind::kZScore};
  g.k_best = {5, 10, 1000};
  g.classifiers = {svm(1), knn(5), nb(1)};
  const auto a = cross_validate(x, t.labels, g, 5, 7);
  const auto b = cross_validate(x, t.labels, g, 5, 7);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_EQ(a.grid_results.size(), 2u * 3u * 3u);  // 1000 clamps to 30
  double sum = 0;
  for (double v : a.per_fold_accuracy) sum += v;
  EXPECT_NEAR(a.mean_accuracy, sum / 5.0, 1e-12);
  for (const auto& r : a.grid_results) {
    EXPECT_LE(r.mean_accuracy, a.mean_accuracy);
    for (double v : r.fold_accuracy) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  // first config in grid order wins among equals
  for (const auto& r : a.grid_results) {
    if (r.mean_accuracy == a.mean_accuracy) {
      EXPECT_EQ(r.config.describe(), a.best_config.describe());
      break;
    }
  }
  const auto j = nlohmann::json::parse(a.to_json());
  EXPECT_EQ(j.at("solver").at("tol").get<double>(), 1e-4);
  EXPECT_EQ(j.at("solver").at("max_iter").get<int>(), 1000);
}

TEST(CrossValidate, InsufficientSamples) {
  const auto x = Matrix::from_rows({{1}, {2}, {3}, {4}, {5}, {6}});
  GridSpec g;
  g.scalers = {ScalerKind::kMinMax};
  g.k_best = {1};
  g.classifiers = {svm(1)};
  EXPECT_EQ(code_of([&] { cross_validate(x, std::vector<int>{0, 0, 0, 1, 1, 1}, g, 5, 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { cross_validate(x, std::vector<int>{0, 0, 0, 1, 1, 1}, g, 1, 0); }),
            ErrorCode::kInvalidArgument);
}

TEST(CrossValidate, NoSignalBand) {
  Rng rng(8);
  Matrix x(200, 20);
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = static_cast<int>(i % 2);
  rng.shuffle(y);
  GridSpec g;
  g.scalers = {ScalerKind::kZScore};
  g.k_best = {5, 20};
  g.classifiers = {svm(1), logreg(Penalty::kL2, 1), knn(5), nb(1)};
  const auto r = cross_validate(x, y, g, 5, 0);
  for (const auto& row : r.grid_results) {
    EXPECT_GE(row.mean_accuracy, 0.35) << row.config.describe();
    EXPECT_LE(row.mean_accuracy, 0.65) << row.config.describe();
  }
}

#include "likspec/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/io.hpp"
#include "likspec/rng.hpp"

namespace likspec::ml {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- Matrix

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) {
      throw Error(ErrorCode::kInvalidArgument, "feature rows differ in length");
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
  Matrix m(idx.size(), cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = row(idx[i]);
    std::copy(src.begin(), src.end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::select_cols(std::span<const std::size_t> idx) const {
  Matrix m(rows, idx.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double* src = data.data() + i * cols;
    double* dst = m.data.data() + i * idx.size();
    for (std::size_t j = 0; j < idx.size(); ++j) dst[j] = src[idx[j]];
  }
  return m;
}

// ---------------------------------------------------------------- enums

const char* to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::kMinMax: return "minmax";
    case ScalerKind::kZScore: return "zscore";
    case ScalerKind::kRobust: return "robust";
  }
  return "minmax";
}

const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kLogReg: return "logreg";
    case ClassifierKind::kKnn: return "knn";
    case ClassifierKind::kNaiveBayes: return "naive_bayes";
    case ClassifierKind::kLinearSvm: return "linear_svm";
  }
  return "linear_svm";
}

const char* to_string(Penalty p) { return p == Penalty::kL1 ? "l1" : "l2"; }

ScalerKind parse_scaler(std::string_view s) {
  if (s == "minmax") return ScalerKind::kMinMax;
  if (s == "zscore") return ScalerKind::kZScore;
  if (s == "robust") return ScalerKind::kRobust;
  throw Error(ErrorCode::kConfig, "unknown scaler '" + std::string(s) + "'");
}

ClassifierKind parse_classifier(std::string_view s) {
  if (s == "logreg") return ClassifierKind::kLogReg;
  if (s == "knn") return ClassifierKind::kKnn;
  if (s == "naive_bayes") return ClassifierKind::kNaiveBayes;
  if (s == "linear_svm") return ClassifierKind::kLinearSvm;
  throw Error(ErrorCode::kConfig, "unknown classifier '" + std::string(s) + "'");
}

Penalty parse_penalty(std::string_view s) {
  if (s == "l1") return Penalty::kL1;
  if (s == "l2") return Penalty::kL2;
  throw Error(ErrorCode::kConfig, "unknown penalty '" + std::string(s) + "'");
}

std::string ClassifierParams::describe() const {
  std::string out = to_string(kind);
  switch (kind) {
    case ClassifierKind::kLogReg:
      out += "(penalty=" + std::string(to_string(penalty)) + ",C=" + io::format_double(c) + ")";
      break;
    case ClassifierKind::kLinearSvm:
      out += "(C=" + io::format_double(c) + ")";
      break;
    case ClassifierKind::kKnn:
      out += "(n=" + std::to_string(n_neighbors) + ")";
      break;
    case ClassifierKind::kNaiveBayes:
      out += "(alpha=" + io::format_double(alpha) + ")";
      break;
  }
  return out;
}

std::string PipelineConfig::describe() const {
  return std::string(to_string(scaler)) + "|k=" + std::to_string(k_best) + "|" +
         classifier.describe();
}

namespace {

ojson config_json(const PipelineConfig& cfg) {
  ojson j;
  j["scaler"] = to_string(cfg.scaler);
  j["k_best"] = cfg.k_best;
  j["classifier"] = to_string(cfg.classifier.kind);
  switch (cfg.classifier.kind) {
    case ClassifierKind::kLogReg:
      j["penalty"] = to_string(cfg.classifier.penalty);
      j["C"] = cfg.classifier.c;
      break;
    case ClassifierKind::kLinearSvm:
      j["C"] = cfg.classifier.c;
      break;
    case ClassifierKind::kKnn:
      j["n"] = cfg.classifier.n_neighbors;
      break;
    case ClassifierKind::kNaiveBayes:
      j["alpha"] = cfg.classifier.alpha;
      break;
  }
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.scaler = parse_scaler(j.at("scaler").get<std::string>());
  cfg.k_best = j.at("k_best").get<std::size_t>();
  cfg.classifier.kind = parse_classifier(j.at("classifier").get<std::string>());
  if (j.contains("penalty")) cfg.classifier.penalty = parse_penalty(j.at("penalty").get<std::string>());
  if (j.contains("C")) cfg.classifier.c = j.at("C").get<double>();
  if (j.contains("n")) cfg.classifier.n_neighbors = j.at("n").get<int>();
  if (j.contains("alpha")) cfg.classifier.alpha = j.at("alpha").get<double>();
  return cfg;
}

double percentile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return v[lo] + t * (v[hi] - v[lo]);
}

double log1pexp_neg(double m) {
  // log(1 + exp(-m)), stable for either sign of m
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Appends a constant-1 bias column; the bias weight is regularized like
// every other weight.
Matrix with_bias(const Matrix& x) {
  Matrix m(x.rows, x.cols + 1);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto src = x.row(i);
    auto dst = m.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols] = 1.0;
  }
  return m;
}

// min_w 0.5 |w|^2 + C sum log(1 + exp(-y_i w.x_i)) by inexact Newton with
// conjugate-gradient inner solves and Armijo backtracking.
std::vector<double> logreg_l2(const Matrix& x, const std::vector<double>& y, double c,
                              const SolverOptions& opts, FitDiagnostics& diag) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> w(d, 0.0), z(n, 0.0), g(d), dvec(d), r(d), p(d), hp(d), xp(n),
      curv(n), wn(d);
  auto objective = [&](const std::vector<double>& ww, std::vector<double>& zz) {
    double f = 0.5 * dot(ww.data(), ww.data(), d);
    for (std::size_t i = 0; i < n; ++i) {
      zz[i] = dot(x.data.data() + i * d, ww.data(), d);
      f += c * log1pexp_neg(y[i] * zz[i]);
    }
    return f;
  };
  double f = objective(w, z);
  double gnorm0 = 0.0;
  diag = {};
  for (int it = 0; it < opts.max_iter; ++it) {
    g = w;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigmoid(y[i] * z[i]);
      const double coef = c * (s - 1.0) * y[i];
      const double* xi = x.data.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += coef * xi[j];
      curv[i] = c * s * (1.0 - s);
    }
    const double gnorm = std::sqrt(dot(g.data(), g.data(), d));
    if (it == 0) gnorm0 = gnorm;
    diag.iterations = it;
    diag.final_measure = gnorm;
    if (gnorm <= opts.tol * gnorm0) {
      diag.converged = true;
      return w;
    }
    // CG on (I + X^T D X) dvec = -g
    std::fill(dvec.begin(), dvec.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) r[j] = -g[j];
    p = r;
    double rr = dot(r.data(), r.data(), d);
    const double cg_tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
    for (std::size_t cg = 0; cg < std::max<std::size_t>(d, 10) && std::sqrt(rr) > cg_tol; ++cg) {
      for (std::size_t i = 0; i < n; ++i) {
        xp[i] = curv[i] * dot(x.data.data() + i * d, p.data(), d);
      }
      hp = p;
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) hp[j] += xp[i] * xi[j];
      }
      const double alpha = rr / dot(p.data(), hp.data(), d);
      for (std::size_t j = 0; j < d; ++j) {
        dvec[j] += alpha * p[j];
        r[j] -= alpha * hp[j];
      }
      const double rr_new = dot(r.data(), r.data(), d);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t j = 0; j < d; ++j) p[j] = r[j] + beta * p[j];
    }
    const double gd = dot(g.data(), dvec.data(), d);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < d; ++j) wn[j] = w[j] + step * dvec[j];
      std::vector<double> zn(n);
      const double fn = objective(wn, zn);
      if (fn <= f + 1e-4 * step * gd) {
        w.swap(wn);
        z.swap(zn);
        f = fn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No representable decrease left along the Newton direction.
      diag.converged = false;
      return w;
    }
  }
  diag.iterations = opts.max_iter;
  diag.converged = false;
  return w;
}

// min_w |w|_1 + C sum log(1 + exp(-y_i w.x_i)). Each outer step minimizes a
// quadratic model of the loss plus the L1 term by coordinate descent, then
// backtracks along that direction on the exact objective. Coordinates that
// sit at zero with |grad| < 1 stay out of the step.
std::vector<double> logreg_l1(const Matrix& x, const std::vector<double>& y, double c,
                              const SolverOptions& opts, FitDiagnostics& diag) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> xt(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) xt[j * n + i] = x.data[i * d + j];
  std::vector<double> w(d, 0.0), wn(d), z(n, 0.0), zn(n), curv(n), resid(n), grad(d), step(d),
      weighted;
  std::vector<double> gram, hstep;  // over the active set
  std::vector<std::size_t> active;
  diag = {};

  auto objective = [&](const std::vector<double>& ww, const std::vector<double>& zz) {
    double f = 0.0;
    for (double v : ww) f += std::abs(v);
    for (std::size_t i = 0; i < n; ++i) f += c * log1pexp_neg(y[i] * zz[i]);
    return f;
  };
  double f = objective(w, z);
  double viol0 = 0.0;

  for (int it = 0; it < opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigmoid(y[i] * z[i]);
      resid[i] = c * (s - 1.0) * y[i];
      curv[i] = c * s * (1.0 - s);
    }
    double viol = 0.0;
    active.clear();
    for (std::size_t j = 0; j < d; ++j) {
      const double* col = xt.data() + j * n;
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += resid[i] * col[i];
      grad[j] = g;
      double v;
      if (w[j] > 0) v = g + 1.0;
      else if (w[j] < 0) v = g - 1.0;
      else v = std::max(0.0, std::abs(g) - 1.0);
      viol += v * v;
      if (w[j] != 0.0 || std::abs(g) > 1.0) active.push_back(j);
    }
    viol = std::sqrt(viol);
    if (it == 0) viol0 = viol;
    diag.iterations = it;
    diag.final_measure = viol;
    if (viol <= opts.tol * viol0) {
      diag.converged = true;
      return w;
    }

    // Hessian of the loss on the active set
    const std::size_t m = active.size();
    weighted.assign(m * n, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      const double* col = xt.data() + active[a] * n;
      for (std::size_t i = 0; i < n; ++i) weighted[a * n + i] = curv[i] * col[i];
    }
    gram.assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a; b < m; ++b) {
        const double v = dot(weighted.data() + a * n, xt.data() + active[b] * n, n);
        gram[a * m + b] = v;
        gram[b * m + a] = v;
      }
      gram[a * m + a] += 1e-12;
    }

    // coordinate descent on the quadratic model
    std::fill(step.begin(), step.end(), 0.0);
    hstep.assign(m, 0.0);
    double first = 0.0;
    for (int inner = 0; inner < 200; ++inner) {
      double moved = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        const std::size_t j = active[a];
        const double g = grad[j] + hstep[a], h = gram[a * m + a], wj = w[j] + step[j];
        double dz;
        if (g + 1.0 <= h * wj) dz = -(g + 1.0) / h;
        else if (g - 1.0 >= h * wj) dz = -(g - 1.0) / h;
        else dz = -wj;
        if (std::abs(dz) < 1e-15) continue;
        moved += h * dz * dz;
        // land exactly on zero; a rounding residue would read as nonzero
        if (dz == -wj) dz = -w[j] - step[j], step[j] = -w[j];
        else step[j] += dz;
        const double* row = gram.data() + a * m;
        for (std::size_t b = 0; b < m; ++b) hstep[b] += dz * row[b];
      }
      if (inner == 0) first = moved;
      if (moved <= 1e-4 * first) break;
    }

    std::vector<double> xd(n, 0.0);
    double delta = 0.0;
    for (std::size_t j : active) {
      if (step[j] == 0.0) continue;
      const double* col = xt.data() + j * n;
      for (std::size_t i = 0; i < n; ++i) xd[i] += step[j] * col[i];
      delta += grad[j] * step[j] + std::abs(w[j] + step[j]) - std::abs(w[j]);
    }
    double beta = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < d; ++j) wn[j] = w[j] + beta * step[j];
      for (std::size_t i = 0; i < n; ++i) zn[i] = z[i] + beta * xd[i];
      const double fn = objective(wn, zn);
      if (fn <= f + 0.01 * beta * delta) {
        w.swap(wn);
        z.swap(zn);
        f = fn;
        accepted = true;
        break;
      }
      beta *= 0.5;
    }
    if (!accepted) {
      diag.converged = false;
      return w;
    }
  }
  diag.iterations = opts.max_iter;
  diag.converged = false;
  return w;
}

// Hinge-loss linear SVM, min_w 0.5 |w|^2 + C sum max(0, 1 - y_i w.x_i),
// by dual coordinate descent over alpha in [0, C]. Converged when the spread
// of projected dual gradients over one epoch is below tol.
std::vector<double> linear_svm(const Matrix& x, const std::vector<double>& y, double c,
                               const SolverOptions& opts, FitDiagnostics& diag) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> w(d, 0.0), alpha(n, 0.0), qdiag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data.data() + i * d;
    qdiag[i] = dot(xi, xi, d);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(0);
  diag = {};
  for (int epoch = 0; epoch < opts.max_iter; ++epoch) {
    rng.shuffle(order);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const double* xi = x.data.data() + i * d;
      const double grad = y[i] * dot(w.data(), xi, d) - 1.0;
      double pg = grad;
      if (alpha[i] == 0.0) pg = std::min(grad, 0.0);
      else if (alpha[i] == c) pg = std::max(grad, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg != 0.0 && qdiag[i] > 0.0) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - grad / qdiag[i], 0.0, c);
        const double delta = (alpha[i] - old) * y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += delta * xi[j];
      }
    }
    diag.iterations = epoch + 1;
    diag.final_measure = pg_max - pg_min;
    if (pg_max - pg_min < opts.tol) {
      diag.converged = true;
      return w;
    }
  }
  diag.converged = false;
  return w;
}

void check_inputs(const Matrix& x, std::span<const int> y) {
  if (x.rows != y.size()) {
    throw Error(ErrorCode::kInvalidArgument, "feature rows and labels differ in count");
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite feature value");
  }
  std::size_t counts[2] = {0, 0};
  for (int label : y) {
    if (label != 0 && label != 1) throw Error(ErrorCode::kInvalidArgument, "labels must be 0 or 1");
    ++counts[label];
  }
  if (counts[0] < 2 || counts[1] < 2) {
    throw Error(ErrorCode::kTraining, "need at least 2 samples of each class");
  }
}

}  // namespace

// ---------------------------------------------------------------- Scaler

Scaler Scaler::fit(ScalerKind kind, const Matrix& x) {
  if (x.rows == 0) throw Error(ErrorCode::kInvalidArgument, "scaler: no rows");
  Scaler s;
  s.kind = kind;
  s.offset.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 1.0);
  std::vector<double> col(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    for (std::size_t i = 0; i < x.rows; ++i) col[i] = x(i, j);
    double off = 0.0, sc = 1.0;
    switch (kind) {
      case ScalerKind::kMinMax: {
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        off = *mn;
        sc = *mx - *mn;
        break;
      }
      case ScalerKind::kZScore: {
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        off = mean;
        sc = std::sqrt(ss / static_cast<double>(col.size()));
        break;
      }
      case ScalerKind::kRobust: {
        std::sort(col.begin(), col.end());
        off = percentile_sorted(col, 0.5);
        sc = percentile_sorted(col, 0.75) - percentile_sorted(col, 0.25);
        break;
      }
    }
    s.offset[j] = off;
    s.scale[j] = sc > 0.0 ? sc : 1.0;
  }
  return s;
}

Matrix Scaler::transform(const Matrix& x) const {
  if (x.cols != offset.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scaler: column count mismatch");
  }
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* r = out.data.data() + i * x.cols;
    for (std::size_t j = 0; j < x.cols; ++j) r[j] = (r[j] - offset[j]) / scale[j];
  }
  return out;
}

std::vector<double> anova_f(const Matrix& x, std::span<const int> y) {
  std::vector<double> f(x.cols, 0.0);
  double n_c[2] = {0, 0};
  for (int label : y) ++n_c[label];
  const double n = n_c[0] + n_c[1];
  for (std::size_t j = 0; j < x.cols; ++j) {
    double sum[2] = {0, 0};
    for (std::size_t i = 0; i < x.rows; ++i) sum[y[i]] += x(i, j);
    const double mean[2] = {sum[0] / n_c[0], sum[1] / n_c[1]};
    const double grand = (sum[0] + sum[1]) / n;
    const double ssb = n_c[0] * (mean[0] - grand) * (mean[0] - grand) +
                       n_c[1] * (mean[1] - grand) * (mean[1] - grand);
    double ssw = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double dv = x(i, j) - mean[y[i]];
      ssw += dv * dv;
    }
    if (ssw > 0.0) {
      f[j] = ssb / (ssw / (n - 2.0));
    } else {
      f[j] = ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
  }
  return f;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ---------------------------------------------------------------- Pipeline

Pipeline& Pipeline::fit(const Matrix& x, std::span<const int> y) {
  check_inputs(x, y);
  if (config_.k_best < 1 || config_.k_best > x.cols) {
    throw Error(ErrorCode::kInvalidArgument,
                "k_best=" + std::to_string(config_.k_best) + " outside [1, " +
                    std::to_string(x.cols) + "]");
  }
  fitted_ = false;
  n_features_ = x.cols;
  scaler_ = Scaler::fit(config_.scaler, x);
  const Matrix scaled = scaler_.transform(x);
  selected_ = top_k(anova_f(scaled, y), config_.k_best);
  const Matrix xs = scaled.select_cols(selected_);

  const auto& p = config_.classifier;
  diag_ = {};
  weights_.clear();
  nb_shift_.clear();
  nb_log_theta_[0].clear();
  nb_log_theta_[1].clear();
  knn_x_ = {};
  knn_y_.clear();
  switch (p.kind) {
    case ClassifierKind::kLogReg:
    case ClassifierKind::kLinearSvm: {
      if (!(p.c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "C must be > 0");
      const Matrix xb = with_bias(xs);
      std::vector<double> ypm(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) ypm[i] = y[i] == 1 ? 1.0 : -1.0;
      if (p.kind == ClassifierKind::kLinearSvm) {
        weights_ = linear_svm(xb, ypm, p.c, solver_, diag_);
      } else if (p.penalty == Penalty::kL2) {
        weights_ = logreg_l2(xb, ypm, p.c, solver_, diag_);
      } else {
        weights_ = logreg_l1(xb, ypm, p.c, solver_, diag_);
      }
      break;
    }
    case ClassifierKind::kNaiveBayes: {
      if (!(p.alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 0");
      // Complement NB needs non-negative inputs; shift by the training minimum
      // and clamp unseen values at zero.
      nb_shift_.assign(xs.cols, 0.0);
      for (std::size_t j = 0; j < xs.cols; ++j) {
        double mn = xs(0, j);
        for (std::size_t i = 1; i < xs.rows; ++i) mn = std::min(mn, xs(i, j));
        nb_shift_[j] = mn;
      }
      std::vector<double> feat_sum[2] = {std::vector<double>(xs.cols, 0.0),
                                         std::vector<double>(xs.cols, 0.0)};
      for (std::size_t i = 0; i < xs.rows; ++i) {
        for (std::size_t j = 0; j < xs.cols; ++j) {
          feat_sum[y[i]][j] += xs(i, j) - nb_shift_[j];
        }
      }
      for (int cls = 0; cls < 2; ++cls) {
        const auto& comp = feat_sum[1 - cls];
        double total = 0.0;
        for (double v : comp) total += v + p.alpha;
        nb_log_theta_[cls].resize(xs.cols);
        for (std::size_t j = 0; j < xs.cols; ++j) {
          nb_log_theta_[cls][j] = std::log((comp[j] + p.alpha) / total);
        }
      }
      break;
    }
    case ClassifierKind::kKnn: {
      if (p.n_neighbors < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
      knn_x_ = xs;
      knn_y_.assign(y.begin(), y.end());
      break;
    }
  }
  fitted_ = true;
  return *this;
}

std::vector<double> Pipeline::decision(const Matrix& x) const {
  if (!fitted_) throw Error(ErrorCode::kNotFitted, "pipeline is not fitted");
  if (x.cols != n_features_) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(n_features_) + " columns, got " +
                    std::to_string(x.cols));
  }
  for (double v : x.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite feature value");
  }
  const Matrix xs = scaler_.transform(x).select_cols(selected_);
  const std::size_t k = xs.cols;
  std::vector<double> out(xs.rows, 0.0);
  const auto& p = config_.classifier;
  switch (p.kind) {
    case ClassifierKind::kLogReg:
    case ClassifierKind::kLinearSvm:
      for (std::size_t i = 0; i < xs.rows; ++i) {
        out[i] = dot(weights_.data(), xs.data.data() + i * k, k) + weights_[k];
      }
      break;
    case ClassifierKind::kNaiveBayes:
      for (std::size_t i = 0; i < xs.rows; ++i) {
        double jll[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < k; ++j) {
          const double v = std::max(0.0, xs(i, j) - nb_shift_[j]);
          jll[0] -= v * nb_log_theta_[0][j];
          jll[1] -= v * nb_log_theta_[1][j];
        }
        out[i] = jll[1] - jll[0];
      }
      break;
    case ClassifierKind::kKnn: {
      const std::size_t nn =
          std::min<std::size_t>(static_cast<std::size_t>(p.n_neighbors), knn_x_.rows);
      std::vector<std::pair<double, std::size_t>> dist(knn_x_.rows);
      for (std::size_t i = 0; i < xs.rows; ++i) {
        const double* q = xs.data.data() + i * k;
        for (std::size_t t = 0; t < knn_x_.rows; ++t) {
          const double* r = knn_x_.data.data() + t * k;
          double dsq = 0.0;
          for (std::size_t j = 0; j < k; ++j) dsq += (q[j] - r[j]) * (q[j] - r[j]);
          dist[t] = {dsq, t};
        }
        // pair ordering breaks distance ties by lower training index
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(nn),
                          dist.end());
        double votes = 0.0;
        for (std::size_t t = 0; t < nn; ++t) votes += knn_y_[dist[t].second] == 1 ? 1.0 : -1.0;
        out[i] = votes;
      }
      break;
    }
  }
  return out;
}

std::vector<int> Pipeline::predict(const Matrix& x) const {
  const auto d = decision(x);
  std::vector<int> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] > 0.0 ? 1 : 0;
  return out;
}

std::string Pipeline::to_json() const {
  if (!fitted_) throw Error(ErrorCode::kNotFitted, "pipeline is not fitted");
  ojson j;
  j["format"] = "likspec.pipeline";
  j["version"] = 1;
  j["config"] = config_json(config_);
  j["solver"] = {{"tol", solver_.tol}, {"max_iter", solver_.max_iter}};
  j["diagnostics"] = {{"iterations", diag_.iterations},
                      {"converged", diag_.converged},
                      {"final_measure", diag_.final_measure}};
  j["n_features"] = n_features_;
  j["scaler"] = {{"offset", scaler_.offset}, {"scale", scaler_.scale}};
  j["selected"] = selected_;
  ojson state;
  switch (config_.classifier.kind) {
    case ClassifierKind::kLogReg:
    case ClassifierKind::kLinearSvm:
      state["weights"] = weights_;
      break;
    case ClassifierKind::kNaiveBayes:
      state["shift"] = nb_shift_;
      state["log_theta_0"] = nb_log_theta_[0];
      state["log_theta_1"] = nb_log_theta_[1];
      break;
    case ClassifierKind::kKnn:
      state["rows"] = knn_x_.rows;
      state["x"] = knn_x_.data;
      state["y"] = knn_y_;
      break;
  }
  j["state"] = std::move(state);
  return j.dump(1) + "\n";
}

Pipeline Pipeline::from_json(std::string_view text) {
  Pipeline p;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "likspec.pipeline" ||
        j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kParse, "not a version-1 pipeline file");
    }
    p.config_ = config_from_json(j.at("config"));
    p.solver_.tol = j.at("solver").at("tol").get<double>();
    p.solver_.max_iter = j.at("solver").at("max_iter").get<int>();
    p.diag_.iterations = j.at("diagnostics").at("iterations").get<int>();
    p.diag_.converged = j.at("diagnostics").at("converged").get<bool>();
    p.diag_.final_measure = j.at("diagnostics").at("final_measure").get<double>();
    p.n_features_ = j.at("n_features").get<std::size_t>();
    p.scaler_.kind = p.config_.scaler;
    p.scaler_.offset = j.at("scaler").at("offset").get<std::vector<double>>();
    p.scaler_.scale = j.at("scaler").at("scale").get<std::vector<double>>();
    p.selected_ = j.at("selected").get<std::vector<std::size_t>>();
    const auto& st = j.at("state");
    switch (p.config_.classifier.kind) {
      case ClassifierKind::kLogReg:
      case ClassifierKind::kLinearSvm:
        p.weights_ = st.at("weights").get<std::vector<double>>();
        if (p.weights_.size() != p.selected_.size() + 1) {
          throw Error(ErrorCode::kParse, "weight vector size mismatch");
        }
        break;
      case ClassifierKind::kNaiveBayes:
        p.nb_shift_ = st.at("shift").get<std::vector<double>>();
        p.nb_log_theta_[0] = st.at("log_theta_0").get<std::vector<double>>();
        p.nb_log_theta_[1] = st.at("log_theta_1").get<std::vector<double>>();
        break;
      case ClassifierKind::kKnn:
        p.knn_x_.rows = st.at("rows").get<std::size_t>();
        p.knn_x_.cols = p.selected_.size();
        p.knn_x_.data = st.at("x").get<std::vector<double>>();
        p.knn_y_ = st.at("y").get<std::vector<int>>();
        if (p.knn_x_.data.size() != p.knn_x_.rows * p.knn_x_.cols) {
          throw Error(ErrorCode::kParse, "knn state size mismatch");
        }
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("pipeline: ") + e.what());
  }
  if (p.scaler_.offset.size() != p.n_features_) {
    throw Error(ErrorCode::kParse, "pipeline: scaler size mismatch");
  }
  p.fitted_ = true;
  return p;
}

void Pipeline::save(const std::filesystem::path& path) const {
  io::write_file(path, to_json());
}

Pipeline Pipeline::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path));
}

// ---------------------------------------------------------------- Grid

std::vector<PipelineConfig> GridSpec::expand() const {
  std::vector<PipelineConfig> out;
  for (auto s : scalers)
    for (auto k : k_best)
      for (const auto& c : classifiers) out.push_back({s, k, c});
  return out;
}

GridSpec GridSpec::reference() {
  GridSpec g;
  g.scalers = {ScalerKind::kMinMax, ScalerKind::kZScore, ScalerKind::kRobust};
  g.k_best = {50, 80, 100, 120, 150, 200, 250, 300, 400, 500};
  for (double c : {1.0, 2.0, 10.0}) {
    ClassifierParams p;
    p.kind = ClassifierKind::kLinearSvm;
    p.c = c;
    g.classifiers.push_back(p);
  }
  for (auto pen : {Penalty::kL1, Penalty::kL2}) {
    for (double c : {1.0, 2.0, 10.0}) {
      ClassifierParams p;
      p.kind = ClassifierKind::kLogReg;
      p.penalty = pen;
      p.c = c;
      g.classifiers.push_back(p);
    }
  }
  for (int n : {3, 5, 7, 9}) {
    ClassifierParams p;
    p.kind = ClassifierKind::kKnn;
    p.n_neighbors = n;
    g.classifiers.push_back(p);
  }
  for (double a : {0.5, 1.0, 2.0}) {
    ClassifierParams p;
    p.kind = ClassifierKind::kNaiveBayes;
    p.alpha = a;
    g.classifiers.push_back(p);
  }
  return g;
}

GridSpec GridSpec::from_json(std::string_view text) {
  GridSpec g;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& s : j.at("scalers")) g.scalers.push_back(parse_scaler(s.get<std::string>()));
    g.k_best = j.at("k_best").get<std::vector<std::size_t>>();
    for (const auto& c : j.at("classifiers")) {
      const auto kind = parse_classifier(c.at("type").get<std::string>());
      ClassifierParams base;
      base.kind = kind;
      switch (kind) {
        case ClassifierKind::kLinearSvm:
          for (double v : c.at("C").get<std::vector<double>>()) {
            auto p = base;
            p.c = v;
            g.classifiers.push_back(p);
          }
          break;
        case ClassifierKind::kLogReg:
          for (const auto& pen : c.at("penalty")) {
            for (double v : c.at("C").get<std::vector<double>>()) {
              auto p = base;
              p.penalty = parse_penalty(pen.get<std::string>());
              p.c = v;
              g.classifiers.push_back(p);
            }
          }
          break;
        case ClassifierKind::kKnn:
          for (int v : c.at("n").get<std::vector<int>>()) {
            auto p = base;
            p.n_neighbors = v;
            g.classifiers.push_back(p);
          }
          break;
        case ClassifierKind::kNaiveBayes:
          for (double v : c.at("alpha").get<std::vector<double>>()) {
            auto p = base;
            p.alpha = v;
            g.classifiers.push_back(p);
          }
          break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("grid: ") + e.what());
  }
  if (g.scalers.empty() || g.k_best.empty() || g.classifiers.empty()) {
    throw Error(ErrorCode::kConfig, "grid: scalers, k_best and classifiers must be non-empty");
  }
  return g;
}

GridSpec GridSpec::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path));
}

std::string GridSpec::to_json() const {
  ojson j;
  j["scalers"] = ojson::array();
  for (auto s : scalers) j["scalers"].push_back(to_string(s));
  j["k_best"] = k_best;
  j["classifiers"] = ojson::array();
  // Same schema from_json reads: one entry per classifier, singleton lists.
  for (const auto& c : classifiers) {
    ojson e;
    e["type"] = to_string(c.kind);
    switch (c.kind) {
      case ClassifierKind::kLogReg:
        e["penalty"] = {to_string(c.penalty)};
        e["C"] = {c.c};
        break;
      case ClassifierKind::kLinearSvm:
        e["C"] = {c.c};
        break;
      case ClassifierKind::kKnn:
        e["n"] = {c.n_neighbors};
        break;
      case ClassifierKind::kNaiveBayes:
        e["alpha"] = {c.alpha};
        break;
    }
    j["classifiers"].push_back(std::move(e));
  }
  return j.dump(1) + "\n";
}

// ---------------------------------------------------------------- CV

double accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "accuracy: size mismatch or empty");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<int> stratified_folds(std::span<const int> y, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::kInvalidArgument, "folds must be >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] == 1].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(y.size(), 0);
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t idx : members) {
      fold[idx] = static_cast<int>(dealt % static_cast<std::size_t>(folds));
      ++dealt;
    }
  }
  return fold;
}

EvalReport cross_validate(const Matrix& x, std::span<const int> y, const GridSpec& grid,
                          int folds, std::uint64_t seed, SolverOptions opts) {
  check_inputs(x, y);
  if (folds < 2) throw Error(ErrorCode::kInvalidArgument, "folds must be >= 2");
  std::size_t counts[2] = {0, 0};
  for (int label : y) ++counts[label];
  if (counts[0] < static_cast<std::size_t>(folds) || counts[1] < static_cast<std::size_t>(folds)) {
    throw Error(ErrorCode::kInvalidArgument,
                "insufficient samples: each class needs at least `folds` members");
  }

  GridSpec effective = grid;
  effective.k_best.clear();
  for (auto k : grid.k_best) {
    const auto kk = std::clamp<std::size_t>(k, 1, x.cols);
    if (std::find(effective.k_best.begin(), effective.k_best.end(), kk) == effective.k_best.end()) {
      effective.k_best.push_back(kk);
    }
  }
  const auto configs = effective.expand();
  if (configs.empty()) throw Error(ErrorCode::kConfig, "empty grid");

  EvalReport report;
  report.folds = folds;
  report.seed = seed;
  report.solver = opts;
  report.n_samples = x.rows;
  report.n_features = x.cols;
  report.grid_results.resize(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    report.grid_results[c].config = configs[c];
    report.grid_results[c].fold_accuracy.assign(static_cast<std::size_t>(folds), 0.0);
  }

  const auto fold_of = stratified_folds(y, folds, seed);
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const Matrix xtr = x.select_rows(tr), xte = x.select_rows(te);
    std::vector<int> ytr, yte;
    for (auto i : tr) ytr.push_back(y[i]);
    for (auto i : te) yte.push_back(y[i]);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      Pipeline p(configs[c], opts);
      p.fit(xtr, ytr);
      report.grid_results[c].fold_accuracy[static_cast<std::size_t>(f)] =
          accuracy(yte, p.predict(xte));
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    auto& r = report.grid_results[c];
    double sum = 0.0;
    for (double a : r.fold_accuracy) sum += a;
    r.mean_accuracy = sum / static_cast<double>(folds);
    if (r.mean_accuracy > report.grid_results[best].mean_accuracy) best = c;
  }
  report.best_config = configs[best];
  report.per_fold_accuracy = report.grid_results[best].fold_accuracy;
  report.mean_accuracy = report.grid_results[best].mean_accuracy;
  return report;
}

std::string EvalReport::to_json() const {
  ojson j;
  j["format"] = "likspec.eval_report";
  j["version"] = 1;
  j["n_samples"] = n_samples;
  j["n_features"] = n_features;
  j["folds"] = folds;
  j["seed"] = seed;
  j["solver"] = {{"tol", solver.tol}, {"max_iter", solver.max_iter}};
  j["best_config"] = config_json(best_config);
  j["mean_accuracy"] = mean_accuracy;
  j["per_fold_accuracy"] = per_fold_accuracy;
  ojson rows = ojson::array();
  for (const auto& r : grid_results) {
    ojson row;
    row["config"] = config_json(r.config);
    row["mean_accuracy"] = r.mean_accuracy;
    row["fold_accuracy"] = r.fold_accuracy;
    rows.push_back(std::move(row));
  }
  j["grid_results"] = std::move(rows);
  return j.dump(1) + "\n";
}

}  // namespace likspec::ml

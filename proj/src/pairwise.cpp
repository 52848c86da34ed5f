#include "likspec/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/io.hpp"
#include "likspec/rng.hpp"

namespace likspec::pairwise {

const char* to_string(Direction d) {
  return d == Direction::kModelHigher ? "model_higher" : "human_higher";
}

Direction parse_direction(std::string_view s) {
  if (s == "model_higher") return Direction::kModelHigher;
  if (s == "human_higher") return Direction::kHumanHigher;
  throw Error(ErrorCode::kInvalidArgument, "unknown direction '" + std::string(s) + "'");
}

double low_band_sum(const Spectrum& spec, std::size_t delta_k) {
  if (delta_k < 1) throw Error(ErrorCode::kInvalidArgument, "delta_k must be >= 1");
  if (delta_k > spec.bins()) {
    throw Error(ErrorCode::kInvalidArgument,
                "delta_k=" + std::to_string(delta_k) + " exceeds the " +
                    std::to_string(spec.bins()) + " bins of '" + spec.doc_id + "'");
  }
  double s = 0.0;
  for (std::size_t k = 0; k < delta_k; ++k) s += spec.power[k];
  return s;
}

PairVerdict classify_pair(const KeyedSpectrum& a, const KeyedSpectrum& b,
                          const HeuristicConfig& cfg) {
  if (a.pair_key != b.pair_key) {
    throw Error(ErrorCode::kInvalidArgument,
                "classify_pair: pair keys differ ('" + a.pair_key + "' vs '" + b.pair_key + "')");
  }
  const double sa = low_band_sum(a.spectrum, cfg.delta_k);
  const double sb = low_band_sum(b.spectrum, cfg.delta_k);
  PairVerdict v;
  v.pair_key = a.pair_key;
  v.margin = std::abs(sa - sb);
  v.abstained = v.margin <= cfg.epsilon;
  if (!v.abstained) {
    const bool a_higher = sa > sb;
    const bool a_is_model = cfg.direction == Direction::kModelHigher ? a_higher : !a_higher;
    v.predicted_model_id = a_is_model ? a.spectrum.doc_id : b.spectrum.doc_id;
  }
  return v;
}

namespace {

// Score of one pair under cfg: 1 correct, 0 wrong, 0.5 abstained.
double pair_score(const SpectrumPair& p, const HeuristicConfig& cfg) {
  const double sh = low_band_sum(p.human, cfg.delta_k);
  const double sm = low_band_sum(p.model, cfg.delta_k);
  if (std::abs(sh - sm) <= cfg.epsilon) return 0.5;
  const bool model_higher = sm > sh;
  return (cfg.direction == Direction::kModelHigher) == model_higher ? 1.0 : 0.0;
}

std::size_t min_bins(const std::vector<SpectrumPair>& pairs) {
  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (const auto& p : pairs) m = std::min({m, p.human.bins(), p.model.bins()});
  return m;
}

}  // namespace

double pair_accuracy(const std::vector<SpectrumPair>& pairs, const HeuristicConfig& cfg) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no pairs");
  double sum = 0.0;
  for (const auto& p : pairs) sum += pair_score(p, cfg);
  return sum / static_cast<double>(pairs.size());
}

std::vector<PairVerdict> classify_all(const std::vector<SpectrumPair>& pairs,
                                      const HeuristicConfig& cfg) {
  std::vector<PairVerdict> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(classify_pair({p.pair_key, p.human}, {p.pair_key, p.model}, cfg));
  }
  return out;
}

SweepResult sweep_delta(const std::vector<SpectrumPair>& pairs, std::size_t k_max,
                        double epsilon) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep_delta: empty corpus");
  if (k_max < 1) throw Error(ErrorCode::kInvalidArgument, "sweep_delta: k_max must be >= 1");
  if (epsilon < 0.0) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  SweepResult r;
  r.k_max_requested = k_max;
  r.k_max_effective = std::min(k_max, min_bins(pairs));
  r.epsilon = epsilon;
  r.n_pairs = pairs.size();
  if (r.k_max_effective < 1) {
    throw Error(ErrorCode::kTooShort, "sweep_delta: a spectrum has no bins");
  }
  bool have_best = false;
  for (std::size_t dk = 1; dk <= r.k_max_effective; ++dk) {
    for (auto dir : {Direction::kModelHigher, Direction::kHumanHigher}) {
      SweepRow row{dk, dir, pair_accuracy(pairs, {dk, epsilon, dir})};
      r.rows.push_back(row);
      if (!have_best || row.accuracy > r.best.accuracy) {
        r.best = row;
        have_best = true;
      }
    }
  }
  return r;
}

HeuristicConfig calibrate_direction(const std::vector<SpectrumPair>& pairs,
                                    std::size_t delta_k, double epsilon) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "calibration set is empty");
  long long balance = 0;
  for (const auto& p : pairs) {
    const double diff = low_band_sum(p.model, delta_k) - low_band_sum(p.human, delta_k);
    if (diff > 0) ++balance;
    else if (diff < 0) --balance;
  }
  HeuristicConfig cfg;
  cfg.delta_k = delta_k;
  cfg.epsilon = epsilon;
  cfg.direction = balance >= 0 ? Direction::kModelHigher : Direction::kHumanHigher;
  return cfg;
}

HeldOutResult held_out_evaluation(const std::vector<SpectrumPair>& pairs, std::size_t k_max,
                                  double epsilon, const std::vector<std::uint64_t>& seeds) {
  if (pairs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "held-out evaluation needs >= 2 pairs");
  }
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  HeldOutResult out;
  double total = 0.0;
  for (auto seed : seeds) {
    std::vector<std::size_t> idx(pairs.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    const std::size_t half = pairs.size() / 2;
    std::vector<SpectrumPair> cal, test;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < half ? cal : test).push_back(pairs[idx[i]]);
    }
    const auto sweep = sweep_delta(cal, k_max, epsilon);
    HeldOutSplit s;
    s.seed = seed;
    s.chosen = {sweep.best.delta_k, epsilon, sweep.best.direction};
    s.calibration_accuracy = sweep.best.accuracy;
    s.test_accuracy = pair_accuracy(test, s.chosen);
    total += s.test_accuracy;
    out.splits.push_back(s);
  }
  out.mean_test_accuracy = total / static_cast<double>(seeds.size());
  return out;
}

namespace {

std::unordered_map<std::string, const Spectrum*> index_spectra(
    const std::vector<Spectrum>& spectra) {
  std::unordered_map<std::string, const Spectrum*> by_id;
  for (const auto& s : spectra) by_id.emplace(s.doc_id, &s);
  return by_id;
}

const Spectrum& lookup(const std::unordered_map<std::string, const Spectrum*>& by_id,
                       const std::string& id) {
  auto it = by_id.find(id);
  if (it == by_id.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no spectrum for document '" + id + "'");
  }
  return *it->second;
}

}  // namespace

std::vector<SpectrumPair> join_pairs(const PairedCorpus& corpus,
                                     const std::vector<Spectrum>& spectra) {
  const auto by_id = index_spectra(spectra);
  std::vector<SpectrumPair> out;
  for (const auto& [h, m] : corpus.pairs) {
    out.push_back({corpus.doc(h).pair_key, lookup(by_id, h), lookup(by_id, m)});
  }
  return out;
}

std::vector<SpectrumPair> pairs_from_csv(std::string_view text,
                                         const std::vector<Spectrum>& spectra) {
  const auto by_id = index_spectra(spectra);
  const auto lines = io::split_lines(text);
  if (lines.empty() || lines[0] != "pair_key,human_id,model_id") {
    throw ParseError(1, "expected header pair_key,human_id,model_id");
  }
  std::vector<SpectrumPair> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = io::split_csv(lines[i]);
    if (f.size() != 3) throw ParseError(i + 1, "expected 3 fields");
    out.push_back({f[0], lookup(by_id, f[1]), lookup(by_id, f[2])});
  }
  return out;
}

std::vector<SpectrumPair> infer_pairs(const std::vector<Spectrum>& spectra) {
  struct Members {
    const Spectrum* human = nullptr;
    const Spectrum* model = nullptr;
  };
  std::map<std::string, Members> groups;
  for (const auto& s : spectra) {
    const auto dot = s.doc_id.rfind('.');
    if (dot == std::string::npos) continue;
    auto& g = groups[s.doc_id.substr(0, dot)];
    auto& slot = s.doc_id.substr(dot + 1) == "human" ? g.human : g.model;
    if (slot != nullptr) {
      throw Error(ErrorCode::kPairConflict,
                  "more than one candidate for pair '" + s.doc_id.substr(0, dot) + "'");
    }
    slot = &s;
  }
  std::vector<SpectrumPair> out;
  for (const auto& [key, g] : groups) {
    if (g.human && g.model) out.push_back({key, *g.human, *g.model});
  }
  return out;
}

std::string report_json(const SweepResult& sweep, const HeldOutResult* held_out,
                        const HeuristicConfig& applied,
                        const std::vector<PairVerdict>& verdicts) {
  nlohmann::ordered_json j;
  j["format"] = "likspec.pairwise_report";
  j["version"] = 1;
  j["n_pairs"] = sweep.n_pairs;
  j["epsilon"] = sweep.epsilon;
  j["k_max_requested"] = sweep.k_max_requested;
  j["k_max_effective"] = sweep.k_max_effective;
  j["best"] = {{"delta_k", sweep.best.delta_k},
               {"direction", to_string(sweep.best.direction)},
               {"accuracy", sweep.best.accuracy}};
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : sweep.rows) {
    rows.push_back({{"delta_k", r.delta_k},
                    {"direction", to_string(r.direction)},
                    {"accuracy", r.accuracy}});
  }
  j["sweep"] = std::move(rows);
  if (held_out) {
    nlohmann::ordered_json h;
    h["protocol"] = "calibrate on a random half, evaluate on the other half";
    h["mean_test_accuracy"] = held_out->mean_test_accuracy;
    auto splits = nlohmann::ordered_json::array();
    for (const auto& s : held_out->splits) {
      splits.push_back({{"seed", s.seed},
                        {"delta_k", s.chosen.delta_k},
                        {"direction", to_string(s.chosen.direction)},
                        {"calibration_accuracy", s.calibration_accuracy},
                        {"test_accuracy", s.test_accuracy}});
    }
    h["splits"] = std::move(splits);
    j["held_out"] = std::move(h);
  }
  j["applied"] = {{"delta_k", applied.delta_k},
                  {"direction", to_string(applied.direction)},
                  {"epsilon", applied.epsilon}};
  auto vs = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    vs.push_back({{"pair_key", v.pair_key},
                  {"predicted_model_id", v.predicted_model_id},
                  {"margin", v.margin},
                  {"abstained", v.abstained}});
  }
  j["verdicts"] = std::move(vs);
  return j.dump(1) + "\n";
}

}  // namespace likspec::pairwise

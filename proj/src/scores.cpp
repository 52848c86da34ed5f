#include "likspec/scores.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/io.hpp"

namespace likspec {

using ojson = nlohmann::ordered_json;

const char* to_string(Source s) {
  return s == Source::kHuman ? "human" : "model";
}

Source parse_source(std::string_view s) {
  if (s == "human") return Source::kHuman;
  if (s == "model") return Source::kModel;
  throw Error(ErrorCode::kParse, "unknown source '" + std::string(s) + "'");
}

void ScoredDocument::validate() const {
  if (tokens.size() != nll.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                id + ": " + std::to_string(tokens.size()) + " tokens but " +
                    std::to_string(nll.size()) + " scores");
  }
  if (annotations && annotations->size() != tokens.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                id + ": annotations length " +
                    std::to_string(annotations->size()) + " != " +
                    std::to_string(tokens.size()));
  }
  for (double v : nll) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNumeric, id + ": non-finite score");
    }
  }
  if (tokens.size() < 2) {
    throw Error(ErrorCode::kTooShort, id + ": fewer than 2 tokens");
  }
}

const ScoredDocument& PairedCorpus::doc(std::string_view id) const {
  for (const auto& d : docs) {
    if (d.id == id) return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "no document '" + std::string(id) + "'");
}

namespace {

const std::set<std::string> kFields = {"id",         "pair_key", "source",
                                       "model_name", "tokens",   "nll",
                                       "annotations"};

ScoredDocument from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) throw ParseError(line, "unknown field '" + key + "'");
  }
  ScoredDocument d;
  try {
    d.id = j.at("id").get<std::string>();
    d.pair_key = j.at("pair_key").get<std::string>();
    d.source = parse_source(j.at("source").get<std::string>());
    d.model_name = j.at("model_name").get<std::string>();
    d.tokens = j.at("tokens").get<std::vector<std::string>>();
    d.nll = j.at("nll").get<std::vector<double>>();
    if (j.contains("annotations") && !j.at("annotations").is_null()) {
      d.annotations = j.at("annotations").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
  return d;
}

}  // namespace

std::vector<ScoredDocument> parse_scores(std::string_view jsonl) {
  std::vector<ScoredDocument> docs;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& line : io::split_lines(jsonl)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    ScoredDocument d = from_json(j, line_no);
    d.validate();
    if (!seen.insert(d.id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "line " + std::to_string(line_no) + ": duplicate id '" +
                      d.id + "'");
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<ScoredDocument> load_scores(const std::filesystem::path& path) {
  return parse_scores(io::read_file(path));
}

std::string to_jsonl(const std::vector<ScoredDocument>& docs) {
  std::string out;
  for (const auto& d : docs) {
    ojson j;
    j["id"] = d.id;
    j["pair_key"] = d.pair_key;
    j["source"] = to_string(d.source);
    j["model_name"] = d.model_name;
    j["tokens"] = d.tokens;
    j["nll"] = d.nll;
    if (d.annotations) j["annotations"] = *d.annotations;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_scores(const std::filesystem::path& path,
                 const std::vector<ScoredDocument>& docs) {
  io::write_file(path, to_jsonl(docs));
}

NormalizedSeries zscore(std::string doc_id, const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw Error(ErrorCode::kTooShort, doc_id + ": z-score needs N >= 2");
  }
  double mu = 0.0;
  for (double v : values) mu += v;
  mu /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kDegenerate, doc_id + ": constant score sequence");
  }
  NormalizedSeries out;
  out.doc_id = std::move(doc_id);
  out.mu = mu;
  out.sigma = sigma;
  out.values.reserve(n);
  for (double v : values) out.values.push_back((v - mu) / sigma);
  return out;
}

NormalizedSeries zscore(const ScoredDocument& doc) {
  return zscore(doc.id, doc.nll);
}

PairedCorpus build_pairs(std::vector<ScoredDocument> docs) {
  struct Group {
    std::vector<std::size_t> human;
    std::vector<std::size_t> model;
  };
  // std::map keeps pair output ordered by pair_key.
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto& g = groups[docs[i].pair_key];
    (docs[i].source == Source::kHuman ? g.human : g.model).push_back(i);
  }
  PairedCorpus corpus;
  for (const auto& [key, g] : groups) {
    if (g.human.size() > 1 || g.model.size() > 1) {
      throw Error(ErrorCode::kPairConflict,
                  "pair_key '" + key + "' has " +
                      std::to_string(g.human.size()) + " human and " +
                      std::to_string(g.model.size()) + " model documents");
    }
    if (g.human.size() == 1 && g.model.size() == 1) {
      corpus.pairs.emplace_back(docs[g.human[0]].id, docs[g.model[0]].id);
    } else {
      corpus.incomplete_keys.push_back(key);
    }
  }
  corpus.docs = std::move(docs);
  return corpus;
}

ScoredDocument truncate(const ScoredDocument& doc, long long n) {
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "truncate: n must be >= 2, got " + std::to_string(n));
  }
  // An existing ".trunc<m>" suffix is folded so that repeated truncation
  // names the document by the effective limit min(m, n).
  std::string base = doc.id;
  long long limit = n;
  if (auto pos = base.rfind(".trunc"); pos != std::string::npos) {
    std::string_view digits = std::string_view(base).substr(pos + 6);
    if (!digits.empty() &&
        digits.find_first_not_of("0123456789") == std::string_view::npos &&
        digits.size() < 18) {
      limit = std::min(limit, io::parse_int(digits));
      base.resize(pos);
    }
  }
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(n), doc.size());
  ScoredDocument out = doc;
  out.id = base + ".trunc" + std::to_string(limit);
  out.tokens.resize(keep);
  out.nll.resize(keep);
  if (out.annotations) out.annotations->resize(keep);
  return out;
}

}  // namespace likspec

#include "likspec/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "likspec/error.hpp"
#include "likspec/io.hpp"

namespace likspec::ngram {

namespace {

bool is_punct(unsigned char c) { return c < 128 && std::ispunct(c); }
bool is_space(unsigned char c) { return c < 128 && std::isspace(c); }

constexpr std::string_view kFormat = "likspec.ngram";
constexpr int kFormatVersion = 1;

}  // namespace

std::string normalize_token(std::string_view token) {
  std::string out(token);
  for (auto& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 128) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) {
      std::string_view word = line.substr(i, j - i);
      std::size_t lead = 0;
      while (lead < word.size() && is_punct(word[lead])) ++lead;
      std::size_t trail = word.size();
      while (trail > lead && is_punct(word[trail - 1])) --trail;
      for (std::size_t p = 0; p < lead; ++p) out.emplace_back(1, word[p]);
      if (trail > lead) out.push_back(normalize_token(word.substr(lead, trail - lead)));
      for (std::size_t p = trail; p < word.size(); ++p) out.emplace_back(1, word[p]);
    }
    i = j;
  }
  return out;
}

Model Model::train(const std::vector<std::string>& lines, Options opts) {
  if (!(opts.k > 0.0) || !std::isfinite(opts.k)) {
    throw Error(ErrorCode::kInvalidArgument, "smoothing k must be > 0");
  }
  if (opts.min_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_count must be >= 1");
  }
  std::vector<std::vector<std::string>> sentences;
  std::unordered_map<std::string, long long> raw;
  for (const auto& line : lines) {
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    for (const auto& t : toks) ++raw[t];
    sentences.push_back(std::move(toks));
  }
  if (sentences.empty()) {
    throw Error(ErrorCode::kTraining, "corpus is empty after tokenization");
  }

  Model m;
  m.k_ = opts.k;
  m.min_count_ = opts.min_count;
  m.vocab_ = {std::string(kUnk), std::string(kBos), std::string(kEos)};
  for (const auto& [w, c] : raw) {
    if (c >= opts.min_count) m.vocab_.push_back(w);
  }
  std::sort(m.vocab_.begin(), m.vocab_.end());
  m.vocab_.erase(std::unique(m.vocab_.begin(), m.vocab_.end()), m.vocab_.end());
  m.rebuild_index();
  m.unigrams_.assign(m.vocab_.size(), 0);

  const auto bos = m.id_of(kBos);
  const auto eos = m.id_of(kEos);
  for (const auto& sent : sentences) {
    std::uint32_t prev = bos;
    ++m.unigrams_[bos];
    for (const auto& t : sent) {
      const auto cur = m.id_of(t);
      ++m.unigrams_[cur];
      ++m.bigrams_[{prev, cur}];
      prev = cur;
    }
    ++m.unigrams_[eos];
    ++m.bigrams_[{prev, eos}];
  }
  m.total_tokens_ = 0;
  for (auto c : m.unigrams_) m.total_tokens_ += c;
  m.contexts_.assign(m.vocab_.size(), 0);
  for (const auto& [vw, c] : m.bigrams_) m.contexts_[vw.first] += c;
  return m;
}

Model Model::train_file(const std::filesystem::path& corpus, Options opts) {
  auto lines = io::split_lines(io::read_file(corpus));
  Model m = train(lines, opts);
  m.corpus_label_ = corpus.filename().string();
  return m;
}

void Model::rebuild_index() {
  index_.clear();
  for (std::uint32_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
}

std::uint32_t Model::id_of(std::string_view w) const {
  if (auto it = index_.find(std::string(w)); it != index_.end()) return it->second;
  return index_.at(std::string(kUnk));
}

bool Model::in_vocab(std::string_view w) const {
  return index_.count(std::string(w)) > 0;
}

long long Model::unigram_count(std::string_view w) const {
  if (!in_vocab(w)) return 0;
  return unigrams_[id_of(w)];
}

long long Model::bigram_count(std::string_view v, std::string_view w) const {
  if (!in_vocab(v) || !in_vocab(w)) return 0;
  auto it = bigrams_.find({id_of(v), id_of(w)});
  return it == bigrams_.end() ? 0 : it->second;
}

long long Model::context_count(std::string_view v) const {
  if (!in_vocab(v)) return 0;
  return contexts_[id_of(v)];
}

std::vector<std::string> Model::vocab() const { return vocab_; }

double Model::prob(std::string_view w, std::string_view v) const {
  if (vocab_.empty()) throw Error(ErrorCode::kNotFitted, "ngram model not trained");
  const auto vi = id_of(v);
  const auto wi = id_of(w);
  auto it = bigrams_.find({vi, wi});
  const double c_vw = it == bigrams_.end() ? 0.0 : static_cast<double>(it->second);
  const double c_v = static_cast<double>(contexts_[vi]);
  return (c_vw + k_) / (c_v + k_ * static_cast<double>(vocab_.size()));
}

std::vector<double> Model::score_tokens(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "score_tokens: empty input");
  }
  std::vector<double> out;
  out.reserve(tokens.size());
  std::string prev(kBos);
  for (const auto& t : tokens) {
    std::string cur = normalize_token(t);
    if (!in_vocab(cur)) cur = std::string(kUnk);
    out.push_back(-std::log(prob(cur, prev)));
    prev = std::move(cur);
  }
  return out;
}

ScoredDocument Model::score_document(const ScoredDocument& doc) const {
  ScoredDocument out = doc;
  out.nll = score_tokens(doc.tokens);
  return out;
}

std::string Model::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["order"] = 2;
  j["tokenizer"] = kTokenizerVersion;
  j["smoothing"] = "add-k";
  j["k"] = k_;
  j["min_count"] = min_count_;
  j["corpus"] = corpus_label_;
  j["total_tokens"] = total_tokens_;
  nlohmann::ordered_json uni = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < vocab_.size(); ++i) uni[vocab_[i]] = unigrams_[i];
  j["unigrams"] = std::move(uni);
  nlohmann::ordered_json bi = nlohmann::ordered_json::array();
  for (const auto& [vw, c] : bigrams_) {
    bi.push_back({vocab_[vw.first], vocab_[vw.second], c});
  }
  j["bigrams"] = std::move(bi);
  return j.dump() + "\n";
}

Model Model::from_json(std::string_view text) {
  Model m;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::kParse, "not an ngram model file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported ngram model version");
    }
    if (j.at("tokenizer").get<std::string>() != kTokenizerVersion) {
      throw Error(ErrorCode::kParse, "model built with a different tokenizer");
    }
    m.k_ = j.at("k").get<double>();
    m.min_count_ = j.at("min_count").get<long long>();
    m.corpus_label_ = j.at("corpus").get<std::string>();
    m.total_tokens_ = j.at("total_tokens").get<long long>();
    for (const auto& [w, _] : j.at("unigrams").items()) m.vocab_.push_back(w);
    std::sort(m.vocab_.begin(), m.vocab_.end());
    m.rebuild_index();
    for (auto r : {kUnk, kBos, kEos}) {
      if (!m.in_vocab(r)) throw Error(ErrorCode::kParse, "missing reserved symbol");
    }
    m.unigrams_.assign(m.vocab_.size(), 0);
    for (const auto& [w, c] : j.at("unigrams").items()) {
      m.unigrams_[m.index_.at(w)] = c.get<long long>();
    }
    m.contexts_.assign(m.vocab_.size(), 0);
    for (const auto& row : j.at("bigrams")) {
      const auto v = row.at(0).get<std::string>();
      const auto w = row.at(1).get<std::string>();
      if (!m.in_vocab(v) || !m.in_vocab(w)) {
        throw Error(ErrorCode::kParse, "bigram references word outside vocab");
      }
      const auto c = row.at(2).get<long long>();
      m.bigrams_[{m.index_.at(v), m.index_.at(w)}] = c;
      m.contexts_[m.index_.at(v)] += c;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("ngram model: ") + e.what());
  }
  if (!(m.k_ > 0.0)) throw Error(ErrorCode::kParse, "ngram model: k must be > 0");
  long long sum = 0;
  for (auto c : m.unigrams_) sum += c;
  if (sum != m.total_tokens_) {
    throw Error(ErrorCode::kParse, "ngram model: unigram counts do not sum to total");
  }
  return m;
}

void Model::save(const std::filesystem::path& path) const {
  io::write_file(path, to_json());
}

Model Model::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path));
}

}  // namespace likspec::ngram

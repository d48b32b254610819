#include "hilite/explain.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hilite/common.hpp"
#include "hilite/tagger.hpp"

namespace hilite {

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

void EmbeddingTable::add(std::string token, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw Error("embedding for '" + token + "' has " + std::to_string(vec.size()) +
                " entries, expected " + std::to_string(dim_));
  }
  for (double v : vec) {
    if (!std::isfinite(v)) throw Error("non-finite embedding entry for '" + token + "'");
  }
  if (vectors_.find(token) == vectors_.end()) order_.push_back(token);
  vectors_[std::move(token)] = std::move(vec);
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

std::optional<double> EmbeddingTable::cosine(std::string_view a, std::string_view b) const {
  const auto* va = find(a);
  const auto* vb = find(b);
  if (!va || !vb) return std::nullopt;
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    dot += (*va)[i] * (*vb)[i];
    na += (*va)[i] * (*va)[i];
    nb += (*vb)[i] * (*vb)[i];
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

EmbeddingTable EmbeddingTable::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("embedding file is empty");
  std::istringstream header(line);
  std::size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw Error("embedding header must be \"count dim\"");
  }
  EmbeddingTable table(dim);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    std::string token;
    row >> token;
    std::vector<double> vec;
    double v;
    while (row >> v) vec.push_back(v);
    if (!row.eof()) throw Error("embedding line " + std::to_string(lineno) + ": bad number");
    table.add(std::move(token), std::move(vec));
  }
  if (table.size() != count) {
    throw Error("embedding header declares " + std::to_string(count) + " vectors, found " +
                std::to_string(table.size()));
  }
  return table;
}

void EmbeddingTable::save(std::ostream& out) const {
  out << order_.size() << ' ' << dim_ << '\n';
  for (const auto& tok : order_) {
    out << tok;
    for (double v : vectors_.at(tok)) out << ' ' << format_fixed(v, 6);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Stopwords
// ---------------------------------------------------------------------------

const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
      "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
      "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
      "having", "he", "her", "here", "him", "his", "how", "i", "if", "in",
      "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
      "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only",
      "or", "other", "our", "out", "over", "own", "same", "she", "should", "so",
      "some", "such", "than", "that", "the", "their", "them", "themselves", "then", "there",
      "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
      "very", "was", "we", "were", "what", "when", "where", "which", "while", "who",
      "whom", "why", "will", "with", "would", "you", "your", "versus", "vs", "via"};
  return words;
}

StopwordSet load_stopwords(std::istream& in) {
  StopwordSet out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.insert(to_lower(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

std::set<std::size_t> highlight_all(std::span<const WordToken> title) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < title.size(); ++i) out.insert(i);
  return out;
}

std::set<std::size_t> overlapper(std::span<const std::string> seed_tokens,
                                 std::span<const WordToken> title, const StopwordSet& stopwords,
                                 const IdfTable& idf, double idf_floor) {
  std::unordered_set<std::string_view> seed(seed_tokens.begin(), seed_tokens.end());
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < title.size(); ++i) {
    const auto tok = to_lower(title[i].text);
    if (!seed.count(tok) || stopwords.count(tok) || !has_word_char(tok)) continue;
    if (idf.idf(tok) < idf_floor) continue;
    out.insert(i);
  }
  return out;
}

double bm25_token_score(std::string_view token, std::span<const std::string> seed_doc,
                        const IdfTable& idf, double avgdl, const Bm25Params& params) {
  if (!(avgdl > 0.0)) throw Error("BM25 needs a positive average document length");
  const auto tf = static_cast<double>(std::count(seed_doc.begin(), seed_doc.end(), token));
  if (tf == 0.0) return 0.0;
  const double len_norm =
      1.0 - params.b + params.b * static_cast<double>(seed_doc.size()) / avgdl;
  return idf.idf(token) * tf * (params.k1 + 1.0) / (tf + params.k1 * len_norm);
}

std::vector<TokenScore> bm25_scores(std::span<const WordToken> title,
                                    std::span<const std::string> seed_doc, const IdfTable& idf,
                                    const Bm25Params& params) {
  std::vector<TokenScore> out;
  out.reserve(title.size());
  const double avgdl = idf.avg_doc_len();
  for (std::size_t i = 0; i < title.size(); ++i) {
    auto tok = to_lower(title[i].text);
    double s = bm25_token_score(tok, seed_doc, idf, avgdl, params);
    out.push_back({std::move(tok), i, s});
  }
  return out;
}

double embedding_token_relevance(std::string_view token, std::span<const std::string> seed_tokens,
                                 const EmbeddingTable& table) {
  double sum = 0.0;
  for (const auto& s : seed_tokens) sum += table.cosine(token, s).value_or(0.0);
  return sum;
}

std::vector<TokenScore> embedding_scores(std::span<const WordToken> title,
                                         std::span<const std::string> seed_tokens,
                                         const EmbeddingTable& table) {
  std::vector<TokenScore> out;
  out.reserve(title.size());
  for (std::size_t i = 0; i < title.size(); ++i) {
    auto tok = to_lower(title[i].text);
    double s = embedding_token_relevance(tok, seed_tokens, table);
    out.push_back({std::move(tok), i, s});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

namespace {

/// One entry per unique token: first position, best score.
std::vector<TokenScore> collapse_unique(std::span<const TokenScore> scores) {
  std::vector<TokenScore> out;
  std::unordered_map<std::string, std::size_t> at;
  for (const auto& s : scores) {
    auto [it, inserted] = at.try_emplace(s.token, out.size());
    if (inserted) {
      out.push_back(s);
    } else {
      auto& cur = out[it->second];
      cur.score = std::max(cur.score, s.score);
      cur.word_index = std::min(cur.word_index, s.word_index);
    }
  }
  return out;
}

}  // namespace

std::set<std::size_t> select_top_k(std::span<const TokenScore> scores, std::size_t k,
                                   const IdfTable& idf) {
  auto unique = collapse_unique(scores);
  std::vector<double> idfs;
  idfs.reserve(unique.size());
  for (const auto& u : unique) idfs.push_back(idf.idf(u.token));
  std::vector<std::size_t> order(unique.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (unique[a].score != unique[b].score) return unique[a].score > unique[b].score;
    if (idfs[a] != idfs[b]) return idfs[a] > idfs[b];
    return unique[a].word_index < unique[b].word_index;
  });
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.insert(unique[order[i]].word_index);
  }
  return out;
}

std::set<std::size_t> select_softmax_threshold(std::span<const TokenScore> scores,
                                               const ThresholdConfig& config,
                                               const IdfTable& idf) {
  auto unique = collapse_unique(scores);
  std::vector<double> values, idfs;
  for (const auto& u : unique) {
    values.push_back(u.score);
    idfs.push_back(idf.idf(u.token));
  }
  std::set<std::size_t> out;
  for (std::size_t i : softmax_threshold_select(values, idfs, config)) {
    out.insert(unique[i].word_index);
  }
  return out;
}

// ---------------------------------------------------------------------------
// External scores
// ---------------------------------------------------------------------------

ExternalScores load_external_scores(std::istream& in) {
  ExternalScores out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      PairKey key{j.at("seed_id").get<std::string>(), j.at("similar_id").get<std::string>()};
      std::vector<ExternalTokenScore> scores;
      for (const auto& s : j.at("scores")) {
        ExternalTokenScore ts{to_lower(s.at("token").get<std::string>()),
                              s.at("score").get<double>()};
        if (!std::isfinite(ts.score)) throw Error("non-finite score");
        scores.push_back(std::move(ts));
      }
      auto [it, inserted] = out.pairs.insert_or_assign(std::move(key), std::move(scores));
      if (!inserted) ++out.duplicate_lines;
    } catch (const nlohmann::json::exception& e) {
      throw Error("external score line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("external score line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TokenScore> external_token_scores(const PairExample& ex,
                                              std::span<const ExternalTokenScore> scores) {
  const auto lower = lower_texts(ex.similar_title_tokens);
  std::vector<TokenScore> out;
  for (const auto& s : scores) {
    bool found = false;
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (lower[i] == s.token) {
        out.push_back({s.token, i, s.score});
        found = true;
      }
    }
    if (!found) {
      throw Error("external score token '" + s.token + "' is not in the similar title of pair " +
                  ex.seed_id + "/" + ex.similar_id);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "all") return Backend::kAll;
  if (name == "overlap") return Backend::kOverlap;
  if (name == "bm25") return Backend::kBm25;
  if (name == "embed") return Backend::kEmbed;
  if (name == "external") return Backend::kExternal;
  if (name == "tagger") return Backend::kTagger;
  return std::nullopt;
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kAll: return "all";
    case Backend::kOverlap: return "overlap";
    case Backend::kBm25: return "bm25";
    case Backend::kEmbed: return "embed";
    case Backend::kExternal: return "external";
    case Backend::kTagger: return "tagger";
  }
  return "unknown";
}

std::optional<Selection> parse_selection(std::string_view name) {
  if (name == "topk") return Selection::kTopK;
  if (name == "softmax") return Selection::kSoftmax;
  return std::nullopt;
}

Prediction make_prediction(const PairExample& ex, std::string model,
                           const std::set<std::size_t>& selected) {
  Prediction p;
  p.seed_id = ex.seed_id;
  p.similar_id = ex.similar_id;
  p.model = std::move(model);
  const auto lower = lower_texts(ex.similar_title_tokens);
  std::set<std::string> chosen;
  for (std::size_t i : selected) {
    if (i >= lower.size()) {
      throw Error("selected position " + std::to_string(i) + " is outside the title of pair " +
                  ex.seed_id + "/" + ex.similar_id);
    }
    chosen.insert(lower[i]);
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!chosen.count(lower[i])) continue;
    p.positions.push_back(i);
    if (std::find(p.tokens.begin(), p.tokens.end(), lower[i]) == p.tokens.end()) {
      p.tokens.push_back(lower[i]);
    }
  }
  return p;
}

namespace {

std::vector<std::string> seed_side(const PairExample& ex, bool with_abstract) {
  auto out = lower_texts(ex.seed_title_tokens);
  if (with_abstract) {
    auto abs = lower_texts(ex.seed_abstract_tokens);
    out.insert(out.end(), abs.begin(), abs.end());
  }
  return out;
}

template <typename T>
const T& require(const T* p, std::string_view what, Backend b) {
  if (!p) {
    throw Error(std::string("backend '") + std::string(backend_name(b)) + "' needs " +
                std::string(what));
  }
  return *p;
}

}  // namespace

std::optional<Prediction> explain_example(const PairExample& ex, const ExplainConfig& config,
                                          const ExplainResources& res) {
  const std::string model =
      config.model_name.empty() ? std::string(backend_name(config.backend)) : config.model_name;
  const auto& title = ex.similar_title_tokens;

  auto select = [&](std::span<const TokenScore> scores, std::size_t k) {
    const auto& idf = require(res.idf, "an IDF table", config.backend);
    if (config.selection == Selection::kSoftmax) {
      return select_softmax_threshold(scores, config.threshold, idf);
    }
    return select_top_k(scores, k, idf);
  };

  switch (config.backend) {
    case Backend::kAll:
      return make_prediction(ex, model, highlight_all(title));
    case Backend::kOverlap: {
      const auto seed = seed_side(ex, config.seed_with_abstract);
      return make_prediction(
          ex, model,
          overlapper(seed, title, require(res.stopwords, "a stopword list", config.backend),
                     require(res.idf, "an IDF table", config.backend), config.idf_floor));
    }
    case Backend::kBm25: {
      const auto seed = seed_side(ex, config.seed_with_abstract);
      auto scores = bm25_scores(title, seed, require(res.idf, "an IDF table", config.backend));
      return make_prediction(ex, model, select(scores, config.k));
    }
    case Backend::kEmbed: {
      const auto seed = seed_side(ex, config.seed_with_abstract);
      auto scores =
          embedding_scores(title, seed, require(res.embeddings, "embeddings", config.backend));
      return make_prediction(ex, model, select(scores, config.k));
    }
    case Backend::kExternal: {
      const auto& ext = require(res.external, "an external score file", config.backend);
      auto it = ext.pairs.find({ex.seed_id, ex.similar_id});
      if (it == ext.pairs.end()) return std::nullopt;
      auto scores = external_token_scores(ex, it->second);
      return make_prediction(ex, model, select(scores, config.generative ? 4 : config.k));
    }
    case Backend::kTagger: {
      const auto& tagger = require(res.tagger, "a tagger checkpoint", config.backend);
      return make_prediction(ex, model, tagger.predict_words(ex));
    }
  }
  return std::nullopt;
}

ExplainRun explain_all(std::span<const PairExample> examples, const ExplainConfig& config,
                       const ExplainResources& res, unsigned threads) {
  std::vector<std::optional<Prediction>> slots(examples.size());
  parallel_for(examples.size(), threads,
               [&](std::size_t i) { slots[i] = explain_example(examples[i], config, res); });
  ExplainRun run;
  for (auto& s : slots) {
    if (s) {
      run.predictions.push_back(std::move(*s));
    } else {
      ++run.skipped;
    }
  }
  return run;
}

void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds) {
  for (const auto& p : preds) {
    nlohmann::ordered_json j;
    j["seed_id"] = p.seed_id;
    j["similar_id"] = p.similar_id;
    j["model"] = p.model;
    j["tokens"] = p.tokens;
    j["positions"] = p.positions;
    out << j.dump() << '\n';
  }
}

std::vector<Prediction> read_predictions_jsonl(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Prediction p;
      p.seed_id = j.at("seed_id").get<std::string>();
      p.similar_id = j.at("similar_id").get<std::string>();
      p.model = j.at("model").get<std::string>();
      p.tokens = j.at("tokens").get<std::vector<std::string>>();
      p.positions = j.value("positions", std::vector<std::size_t>{});
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error("prediction line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hilite

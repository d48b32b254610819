#pragma once

// Non-learned explainers and the two selection rules, plus the driver that
// turns a backend choice into per-example predictions.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hilite/dataset.hpp"
#include "hilite/tokenize.hpp"

namespace hilite {

class TaggerModel;

struct TokenScore {
  std::string token;  // lowercase
  std::size_t word_index = 0;
  double score = 0.0;

  bool operator==(const TokenScore&) const = default;
};

/// Word vectors in the usual text format: "count dim", then
/// "token v1 ... v_dim" per line.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  /// Throws Error on a dimension mismatch or a non-finite entry.
  void add(std::string token, std::vector<double> vec);
  const std::vector<double>* find(std::string_view token) const;
  /// Cosine similarity; nullopt when either side is out of vocabulary or has
  /// zero norm.
  std::optional<double> cosine(std::string_view a, std::string_view b) const;

  static EmbeddingTable load(std::istream& in);
  void save(std::ostream& out) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<std::string> order_;
};

using StopwordSet = std::unordered_set<std::string>;

/// The shipped 120-word English list.
const StopwordSet& default_stopwords();
StopwordSet load_stopwords(std::istream& in);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

std::set<std::size_t> highlight_all(std::span<const WordToken> title);

/// Title positions whose lowercase token also appears in `seed_tokens`,
/// excluding stopwords, punctuation-only tokens and tokens with
/// idf < idf_floor.
std::set<std::size_t> overlapper(std::span<const std::string> seed_tokens,
                                 std::span<const WordToken> title, const StopwordSet& stopwords,
                                 const IdfTable& idf, double idf_floor);

struct Bm25Params {
  double k1 = 0.5;
  double b = 0.3;
};

/// idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl)), where tf
/// counts `token` in `seed_doc`. Throws Error if avgdl <= 0.
double bm25_token_score(std::string_view token, std::span<const std::string> seed_doc,
                        const IdfTable& idf, double avgdl, const Bm25Params& params = {});

/// One score per title position.
std::vector<TokenScore> bm25_scores(std::span<const WordToken> title,
                                    std::span<const std::string> seed_doc, const IdfTable& idf,
                                    const Bm25Params& params = {});

/// Sum over seed tokens of cosine(token, seed token). Out-of-vocabulary
/// operands contribute 0.
double embedding_token_relevance(std::string_view token, std::span<const std::string> seed_tokens,
                                 const EmbeddingTable& table);

std::vector<TokenScore> embedding_scores(std::span<const WordToken> title,
                                         std::span<const std::string> seed_tokens,
                                         const EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

/// Collapses to unique lowercase tokens (first position, best score) and
/// keeps the k best. Ties: higher idf, then earlier position. Returns the
/// first-occurrence positions of the selected tokens.
std::set<std::size_t> select_top_k(std::span<const TokenScore> scores, std::size_t k,
                                   const IdfTable& idf);

/// Same collapsing, then max-scaled softmax + threshold + cap over the unique
/// tokens (cap ties broken by idf, then position).
std::set<std::size_t> select_softmax_threshold(std::span<const TokenScore> scores,
                                               const ThresholdConfig& config,
                                               const IdfTable& idf);

// ---------------------------------------------------------------------------
// External scores
// ---------------------------------------------------------------------------

struct ExternalTokenScore {
  std::string token;
  double score = 0.0;
};

struct ExternalScores {
  std::map<PairKey, std::vector<ExternalTokenScore>> pairs;
  std::size_t duplicate_lines = 0;
};

/// JSON Lines {"seed_id","similar_id","scores":[{"token","score"},...]}.
/// A repeated pair replaces the earlier line and is counted. Any malformed
/// line throws Error.
ExternalScores load_external_scores(std::istream& in);

/// Maps external token scores onto title positions. Throws Error naming the
/// pair if a scored token is not in the title.
std::vector<TokenScore> external_token_scores(const PairExample& ex,
                                              std::span<const ExternalTokenScore> scores);

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

enum class Backend { kAll, kOverlap, kBm25, kEmbed, kExternal, kTagger };
enum class Selection { kTopK, kSoftmax };

std::optional<Backend> parse_backend(std::string_view name);
std::string_view backend_name(Backend b);
std::optional<Selection> parse_selection(std::string_view name);

struct ExplainConfig {
  Backend backend = Backend::kBm25;
  Selection selection = Selection::kTopK;
  std::size_t k = 3;
  ThresholdConfig threshold;
  double idf_floor = 1.0;
  /// Extend the seed side from the title to title + abstract.
  bool seed_with_abstract = false;
  /// External scores come from a generative model: default K becomes 4.
  bool generative = false;
  /// Name written into predictions; defaults to the backend name.
  std::string model_name;
};

/// Tables a backend may need. Pointers are non-owning and may be null when
/// the chosen backend does not use them.
struct ExplainResources {
  const IdfTable* idf = nullptr;
  const StopwordSet* stopwords = nullptr;
  const EmbeddingTable* embeddings = nullptr;
  const ExternalScores* external = nullptr;
  const TaggerModel* tagger = nullptr;
};

struct Prediction {
  std::string seed_id;
  std::string similar_id;
  std::string model;
  std::vector<std::string> tokens;     // unique lowercase, title order
  std::vector<std::size_t> positions;  // every title position of those tokens

  bool operator==(const Prediction&) const = default;
};

/// Builds the prediction for a set of selected title positions.
Prediction make_prediction(const PairExample& ex, std::string model,
                           const std::set<std::size_t>& selected);

/// nullopt when an external-score backend has no entry for the pair.
std::optional<Prediction> explain_example(const PairExample& ex, const ExplainConfig& config,
                                          const ExplainResources& res);

struct ExplainRun {
  std::vector<Prediction> predictions;
  std::size_t skipped = 0;
};

ExplainRun explain_all(std::span<const PairExample> examples, const ExplainConfig& config,
                       const ExplainResources& res, unsigned threads = 1);

/// {"seed_id","similar_id","model","tokens":[...],"positions":[...]}
void write_predictions_jsonl(std::ostream& out, std::span<const Prediction> preds);
std::vector<Prediction> read_predictions_jsonl(std::istream& in);

}  // namespace hilite

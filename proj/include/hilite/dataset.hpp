#pragma once

// Labeled (seed, similar) examples from pair aggregates + article metadata.
//
// Per pair: count clicks per similar-title token over the queries that
// contain it, softmax the max-scaled counts, keep tokens at or above the
// threshold (capped to a fraction of the title), then filter and split.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hilite/log_ingest.hpp"
#include "hilite/tokenize.hpp"

namespace hilite {

/// Per-token click totals for one similar title. `tokens` holds the unique
/// lowercased title tokens in first-occurrence order; `counts` is parallel.
struct TokenClickCounts {
  std::vector<std::string> tokens;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  std::int64_t count(std::string_view token) const;
  std::size_t nonzero() const;

  bool operator==(const TokenClickCounts&) const = default;
};

TokenClickCounts count_title_token_clicks(const PairAggregate& agg,
                                          std::span<const WordToken> similar_title);

// ---------------------------------------------------------------------------
// Softmax threshold selection
// ---------------------------------------------------------------------------

/// softmax(v / max|v|). All-zero input gives the uniform distribution.
std::vector<double> scaled_softmax(std::span<const double> values);

struct ThresholdConfig {
  /// Minimum softmax score. With max-scaling a title of n unique tokens and
  /// one dominant token scores at most e / (e + n - 1), so the threshold has
  /// to sit well below 1/3 for realistic title lengths.
  double threshold = 0.09;
  /// At most floor(cap_fraction * n) tokens are kept when more pass.
  double cap_fraction = 0.4;
};

/// Indices whose max-scaled softmax score is >= threshold, capped. Cap
/// ranking: higher score, then higher `secondary`, then lower index. Result is
/// sorted ascending. `secondary` may be empty (treated as all equal).
std::vector<std::size_t> softmax_threshold_select(std::span<const double> scores,
                                                  std::span<const double> secondary,
                                                  const ThresholdConfig& config);

/// Gold tokens (title order) for one pair. Throws Error when counts.total is 0.
std::vector<std::string> select_gold_tokens(const TokenClickCounts& counts,
                                            const ThresholdConfig& config);

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

struct FilterConfig {
  std::int64_t min_clicks = 20;
  std::size_t min_title_len = 7;
  std::size_t min_nonzero = 3;
};

enum class DropReason { kNone, kMinClicks, kMinTitleLen, kMinNonzero, kMissingMetadata, kNoGold };

std::string_view drop_reason_name(DropReason r);

/// First failing rule in the order clicks, title length, nonzero tokens.
DropReason filter_pair(std::int64_t combined_clicks, std::size_t similar_title_len,
                       std::size_t nonzero_tokens, const FilterConfig& config = {});

// ---------------------------------------------------------------------------
// Examples
// ---------------------------------------------------------------------------

struct PairExample {
  std::string seed_id;
  std::string similar_id;
  std::string seed_title;
  std::string seed_abstract;
  std::string similar_title;
  std::vector<WordToken> seed_title_tokens;
  std::vector<WordToken> seed_abstract_tokens;
  std::vector<WordToken> similar_title_tokens;
  std::vector<std::string> gold_tokens;  // unique lowercase, title order
  TokenClickCounts token_counts;
  std::int64_t combined_clicks = 0;

  bool operator==(const PairExample&) const = default;
};

/// Tokenizes the three texts; labels and counts are left empty.
PairExample make_example_texts(std::string seed_id, std::string similar_id,
                               std::string seed_title, std::string seed_abstract,
                               std::string similar_title);

struct BuildConfig {
  ThresholdConfig labeling;
  FilterConfig filter;
  unsigned threads = 1;
};

struct LabelOutcome {
  std::optional<PairExample> example;
  DropReason reason = DropReason::kNone;
};

LabelOutcome label_pair(const PairAggregate& agg, const ArticleTable& articles,
                        const BuildConfig& config);

struct BuildResult {
  std::vector<PairExample> examples;  // sorted by (seed_id, similar_id)
  std::map<DropReason, std::size_t> dropped;
};

BuildResult build_examples(const AggregateMap& aggs, const ArticleTable& articles,
                           const BuildConfig& config = {});

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct DatasetSplits {
  std::vector<PairExample> train;
  std::vector<PairExample> dev;
  std::vector<PairExample> test;
};

/// Assigns whole seed_id groups, visited in seeded-shuffle order, to the split
/// with the largest remaining quota. Deterministic given `seed`; a seed_id
/// never spans two splits. Throws Error if ratios do not sum to 1.
DatasetSplits split_dataset(std::span<const PairExample> examples,
                            std::array<double, 3> ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// IDF
// ---------------------------------------------------------------------------

class IdfTable {
 public:
  IdfTable() = default;
  IdfTable(std::size_t doc_count, std::unordered_map<std::string, std::size_t> doc_freq,
           std::size_t total_length);

  /// ln(1 + (N - df + 0.5) / (df + 0.5)); positive for every df in [0, N].
  double idf(std::string_view token) const;
  std::size_t doc_freq(std::string_view token) const;
  std::size_t doc_count() const { return doc_count_; }
  /// Mean document length in tokens.
  double avg_doc_len() const;

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::size_t> doc_freq_;
  std::size_t total_length_ = 0;
};

/// Documents are lowercase token lists. Throws Error on an empty corpus.
IdfTable compute_idf(std::span<const std::vector<std::string>> documents);

/// One document per article title.
IdfTable idf_from_titles(const ArticleTable& articles);

// ---------------------------------------------------------------------------
// JSON Lines
// ---------------------------------------------------------------------------

void write_dataset_jsonl(std::ostream& out, std::span<const PairExample> examples);
/// Re-tokenizes stored texts. Throws Error on malformed rows or gold tokens
/// that are not in the similar title.
std::vector<PairExample> read_dataset_jsonl(std::istream& in);
std::vector<PairExample> read_dataset_file(const std::string& path);

}  // namespace hilite

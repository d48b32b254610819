#pragma once

// Raw session click logs -> per-pair query/coclick-count aggregates.
//
// Raw log TSV columns: session_id, timestamp_ms, query, rank, article_id.
// Article metadata TSV columns: article_id, title, abstract.
// Aggregates are written as JSON Lines:
//   {"seed_id", "similar_id", "query_counts": {...}, "combined_clicks"}

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hilite {

struct SessionEvent {
  std::string session_id;
  std::int64_t timestamp = 0;
  std::string query;
  int rank = 1;  // 1-based position on the results page
  std::string article_id;

  bool operator==(const SessionEvent&) const = default;
};

struct ParseResult {
  std::vector<SessionEvent> events;
  std::size_t malformed = 0;
};

/// Parses one TSV row. Returns nullopt for anything that violates the row
/// contract (column count, rank >= 1, non-empty query and article id).
std::optional<SessionEvent> parse_log_line(std::string_view line);

/// Malformed rows are skipped and tallied. Throws Error if the stream
/// itself cannot be read.
ParseResult parse_log(std::istream& in);

void write_log_line(std::ostream& out, const SessionEvent& e);

struct CoclickInstance {
  std::string seed_id;     // clicked at the smaller rank
  std::string similar_id;  // clicked at the larger rank
  std::string query;

  bool operator==(const CoclickInstance&) const = default;
};

/// Groups events by (session_id, normalized query) and emits every
/// rank-ordered pair of distinct clicked articles within a group.
/// Repeated clicks on the same article keep the smallest rank. Pairs are
/// emitted in group order, then by seed rank, then by similar rank.
std::vector<CoclickInstance> extract_coclicks(std::span<const SessionEvent> events);

using PairKey = std::pair<std::string, std::string>;

struct PairAggregate {
  std::string seed_id;
  std::string similar_id;
  std::map<std::string, std::int64_t> query_counts;  // normalized query -> count
  std::int64_t combined_clicks = 0;

  bool operator==(const PairAggregate&) const = default;
};

using AggregateMap = std::map<PairKey, PairAggregate>;

AggregateMap aggregate_pairs(std::span<const CoclickInstance> instances);

/// Pointwise sum. Associative and commutative; the empty map is the identity.
AggregateMap merge_aggregates(AggregateMap a, const AggregateMap& b);

/// parse -> coclicks -> aggregate, sharded by session group over `threads`
/// workers and merged in shard order.
AggregateMap aggregate_events(std::span<const SessionEvent> events,
                              unsigned threads = 1);

void write_aggregates_jsonl(std::ostream& out, const AggregateMap& aggs);
AggregateMap read_aggregates_jsonl(std::istream& in);

// ---------------------------------------------------------------------------
// Article metadata
// ---------------------------------------------------------------------------

struct Article {
  std::string id;
  std::string title;
  std::string abstract_text;

  bool operator==(const Article&) const = default;
};

using ArticleTable = std::map<std::string, Article>;

/// Rows with an empty id or title are rejected with Error; the metadata file
/// is produced by tooling, not scraped.
ArticleTable read_articles_tsv(std::istream& in);
void write_articles_tsv(std::ostream& out, const ArticleTable& articles);

}  // namespace hilite

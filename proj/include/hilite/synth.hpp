#pragma once

// Synthetic corpus and session-log generator with planted ground truth.
//
// Articles belong to topic clusters. Every member of a cluster carries the
// cluster's primary topic tokens and a secondary one, plus optional extras.
// Titles mix those with field words (shared across many clusters),
// stopwords and rare fillers; abstracts repeat only the primary topics.
// Sessions query a subset of a target article's topic tokens (mostly the
// primaries) and click matching results, so coclick queries only ever
// contain topic tokens shared by both clicked articles.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hilite/dataset.hpp"
#include "hilite/explain.hpp"
#include "hilite/log_ingest.hpp"

namespace hilite {

struct SynthConfig {
  std::size_t n_articles = 4000;
  std::size_t articles_per_cluster = 10;
  std::size_t primary_topics = 2;    // shared by every cluster member, heavily queried
  std::size_t secondary_topics = 1;  // shared by every member, rarely queried
  std::size_t extra_topic_pool = 4;  // per-cluster optional topic tokens
  std::size_t max_extra_topics = 1;  // so each article has 3..4 topic tokens
  /// Query composition: all primaries with this probability, otherwise one
  /// of them; each secondary / extra token is added independently.
  double full_primary_query_p = 0.8;
  double secondary_query_p = 0.1;
  double extra_query_p = 0.1;
  std::size_t n_fields = 40;
  std::size_t field_words_per_field = 3;
  std::size_t n_fillers = 6000;
  std::size_t title_len_min = 7;
  std::size_t title_len_max = 25;
  double title_len_mean = 17.0;
  std::size_t abstract_len = 60;
  double zipf_exponent = 1.1;
  std::size_t sessions = 600000;
  std::size_t max_clicks = 3;
  std::size_t embedding_dim = 16;
  std::uint64_t seed = 42;

  /// Throws Error when an invariant is violated (title_len_min >= 7,
  /// zipf_exponent > 1, probabilities in [0,1], ...).
  void validate() const;
};

struct SynthArticle {
  std::string id;
  std::size_t cluster = 0;
  std::vector<std::string> topics;  // lowercase topic tokens in the article, primaries first
  std::size_t n_primary = 0;
};

struct SynthCorpus {
  ArticleTable articles;
  std::vector<SynthArticle> meta;  // index = popularity order within the corpus
  std::vector<std::vector<std::size_t>> clusters;  // cluster -> article indices
  std::vector<std::string> stopwords;
  EmbeddingTable embeddings;

  const SynthArticle* find(const std::string& id) const;
};

SynthCorpus generate_corpus(const SynthConfig& config);

/// Shared primary topic tokens of the pair that occur in the similar title,
/// in similar-title order. These are the tokens the click model concentrates
/// on; secondary and extra topics are queried too rarely to pass labeling.
std::vector<std::string> planted_gold(const SynthCorpus& corpus, const std::string& seed_id,
                                      const std::string& similar_id);

std::vector<SessionEvent> generate_sessions(const SynthCorpus& corpus, const SynthConfig& config);

/// article_id \t cluster \t comma-separated topic tokens
void write_topic_map(std::ostream& out, const SynthCorpus& corpus);

/// Examples where gold = similar-title tokens that occur in the seed title but
/// not in the seed abstract. Used to check that the tagger profits from
/// telling the two seed segments apart.
std::vector<PairExample> generate_segment_examples(std::size_t n, std::uint64_t seed);

}  // namespace hilite

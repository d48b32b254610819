#pragma once

#include <string>
#include <vector>

#include "hilite/common.hpp"
#include "hilite/dataset.hpp"
#include "hilite/log_ingest.hpp"

namespace testing_support {

inline const std::vector<std::string>& small_vocab() {
  static const std::vector<std::string> v = {"covid-19", "vaccine", "safety", "efficacy", "mrna",
                                             "dose",     "response", "trial", "the",      "of",
                                             "in",       "cohort",   "risk",  "children", "adults"};
  return v;
}

/// Up to `n` click rows over a handful of sessions, queries and articles.
/// Queries vary in case and spacing; ranks within a (session, query) group
/// are distinct for distinct articles.
inline std::vector<hilite::SessionEvent> random_events(std::size_t n, std::uint64_t seed,
                                                       std::size_t n_articles = 6) {
  hilite::Rng rng(seed);
  const auto& vocab = small_vocab();
  std::vector<hilite::SessionEvent> out;
  while (out.size() < n) {
    const std::string session = "s" + std::to_string(rng.index(8));
    std::string query = vocab[rng.index(6)];
    if (rng.bernoulli(0.5)) query += (rng.bernoulli(0.3) ? "  " : " ") + vocab[rng.index(6)];
    if (rng.bernoulli(0.2)) query[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(query[0])));
    const std::string article = "P" + std::to_string(rng.index(n_articles));
    // Rank is a function of (session, article) so one article never sits at
    // two ranks and two articles never share one.
    const int rank = 1 + static_cast<int>(hilite::fnv1a64(session + "|" + article) % 50);
    out.push_back({session, static_cast<std::int64_t>(out.size()), query, rank, article});
    if (rng.bernoulli(0.1)) out.push_back(out.back());  // repeated click
  }
  out.resize(n);
  return out;
}

/// Titles of 5-12 words drawn from the small vocabulary.
inline hilite::ArticleTable random_articles(std::size_t n, std::uint64_t seed) {
  hilite::Rng rng(seed);
  const auto& vocab = small_vocab();
  hilite::ArticleTable out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "P" + std::to_string(i);
    std::string title;
    const int len = rng.range(5, 12);
    for (int k = 0; k < len; ++k) title += (k ? " " : "") + vocab[rng.index(vocab.size())];
    out[id] = {id, title + ".", "Abstract of " + id + "."};
  }
  return out;
}

}  // namespace testing_support

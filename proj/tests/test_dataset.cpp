#include "hilite/dataset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "hilite/common.hpp"
#include "oracle/builder_oracle.hpp"
#include "support.hpp"

namespace hilite {
namespace {

TokenClickCounts counts_of(std::vector<std::string> tokens, std::vector<std::int64_t> counts) {
  TokenClickCounts c{std::move(tokens), std::move(counts), 0};
  c.total = std::accumulate(c.counts.begin(), c.counts.end(), std::int64_t{0});
  return c;
}

TEST(TokenClicks, SumsQueriesContainingTheToken) {
  PairAggregate agg{"P1", "P2", {{"covid-19 vaccine", 8}, {"vaccine", 4}}, 12};
  auto c = count_title_token_clicks(agg, word_tokenize("Covid-19 vaccine safety"));
  EXPECT_EQ(c.tokens, (std::vector<std::string>{"covid-19", "vaccine", "safety"}));
  EXPECT_EQ(c.counts, (std::vector<std::int64_t>{8, 12, 0}));
  EXPECT_EQ(c.total, 20);
  EXPECT_EQ(c.nonzero(), 2u);
}

TEST(TokenClicks, DisjointQueryGivesZeros) {
  PairAggregate agg{"P1", "P2", {{"kidney", 5}}, 5};
  auto c = count_title_token_clicks(agg, word_tokenize("Heart failure outcomes"));
  EXPECT_EQ(c.total, 0);
}

TEST(TokenClicks, DuplicateTitleTokenIsOneKey) {
  PairAggregate agg{"P1", "P2", {{"dose", 3}}, 3};
  auto c = count_title_token_clicks(agg, word_tokenize("dose and Dose"));
  EXPECT_EQ(c.tokens, (std::vector<std::string>{"dose", "and"}));
  EXPECT_EQ(c.count("dose"), 3);
}

TEST(Softmax, HandValues) {
  std::vector<double> v = {8, 4, 0};
  auto p = scaled_softmax(v);
  const double z = std::exp(1.0) + std::exp(0.5) + 1.0;
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(p[0], 0.5065, 1e-4);
  EXPECT_NEAR(p[1], 0.3072, 1e-4);
  EXPECT_NEAR(p[2], 0.1863, 1e-4);
}

TEST(Softmax, SumsToOne) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(static_cast<std::size_t>(rng.range(1, 30)));
    for (auto& x : v) x = static_cast<double>(rng.range(0, 5000));
    auto p = scaled_softmax(v);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(GoldTokens, ThreeTokenExampleWithoutCap) {
  // floor(0.4 * 3) = 1 would cap this to {covid}; the uncapped reading keeps both.
  auto c = counts_of({"covid", "vaccine", "the"}, {8, 4, 0});
  EXPECT_EQ(select_gold_tokens(c, {.threshold = 0.30, .cap_fraction = 1.0}),
            (std::vector<std::string>{"covid", "vaccine"}));
  EXPECT_EQ(select_gold_tokens(c, {.threshold = 0.30, .cap_fraction = 0.4}),
            (std::vector<std::string>{"covid"}));
}

TEST(GoldTokens, UniformCountsPassAtOneOverN) {
  auto c = counts_of({"a", "b", "c", "d", "e"}, {2, 2, 2, 2, 2});
  EXPECT_EQ(select_gold_tokens(c, {.threshold = 0.2, .cap_fraction = 1.0}).size(), 5u);
  // The cap then keeps floor(0.4 * 5) = 2, earliest positions on ties.
  EXPECT_EQ(select_gold_tokens(c, {.threshold = 0.2, .cap_fraction = 0.4}),
            (std::vector<std::string>{"a", "b"}));
}

TEST(GoldTokens, CapKeepsTopFourOfTen) {
  auto c = counts_of({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9"},
                     {10, 9, 9, 8, 8, 7, 7, 0, 0, 0});
  const ThresholdConfig cfg{.threshold = 0.09, .cap_fraction = 0.4};
  std::vector<double> v(c.counts.begin(), c.counts.end());
  auto p = scaled_softmax(v);
  EXPECT_EQ(std::count_if(p.begin(), p.end(), [&](double x) { return x >= cfg.threshold; }), 7);
  EXPECT_EQ(select_gold_tokens(c, cfg), (std::vector<std::string>{"t0", "t1", "t2", "t3"}));
}

TEST(GoldTokens, ZeroTotalThrows) {
  EXPECT_THROW(select_gold_tokens(counts_of({"a"}, {0}), {}), Error);
}

TEST(GoldTokens, GoldDominatesOrWasCapped) {
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const auto n = static_cast<std::size_t>(rng.range(3, 25));
    std::vector<std::string> toks;
    std::vector<std::int64_t> cnt;
    for (std::size_t i = 0; i < n; ++i) {
      toks.push_back("w" + std::to_string(i));
      cnt.push_back(rng.bernoulli(0.5) ? rng.range(1, 100) : 0);
    }
    cnt[0] = std::max<std::int64_t>(cnt[0], 1);
    auto c = counts_of(toks, cnt);
    const ThresholdConfig cfg{.threshold = 0.02 + 0.2 * rng.uniform(), .cap_fraction = 0.4};
    auto gold = select_gold_tokens(c, cfg);
    EXPECT_LE(gold.size(), static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(n))));
    std::int64_t min_gold = INT64_MAX;
    for (const auto& g : gold) min_gold = std::min(min_gold, c.count(g));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(gold.begin(), gold.end(), toks[i]) == gold.end() && !gold.empty()) {
        EXPECT_LE(cnt[i], min_gold);
      }
    }
  }
}

TEST(Filter, Reasons) {
  EXPECT_EQ(filter_pair(19, 10, 5), DropReason::kMinClicks);
  EXPECT_EQ(filter_pair(20, 6, 5), DropReason::kMinTitleLen);
  EXPECT_EQ(filter_pair(20, 7, 2), DropReason::kMinNonzero);
  EXPECT_EQ(filter_pair(20, 7, 3), DropReason::kNone);
}

TEST(Filter, FuzzedCandidatesNeverViolateBounds) {
  Rng rng(77);
  std::size_t kept = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t clicks = rng.range(0, 60);
    const auto len = static_cast<std::size_t>(rng.range(0, 20));
    const auto nz = static_cast<std::size_t>(rng.range(0, static_cast<int>(len)));
    if (filter_pair(clicks, len, nz) != DropReason::kNone) continue;
    ++kept;
    EXPECT_GE(clicks, 20);
    EXPECT_GE(len, 7u);
    EXPECT_GE(nz, 3u);
  }
  EXPECT_GT(kept, 0u);
}

// ---------------------------------------------------------------------------

std::size_t expect_matches_oracle(const std::vector<SessionEvent>& events, const ArticleTable& articles,
                           const oracle::Thresholds& t) {
  BuildConfig cfg;
  cfg.labeling = {t.p, t.cap};
  cfg.filter = {t.min_clicks, t.min_len, t.min_nonzero};
  const auto built = build_examples(aggregate_events(events, 2), articles, cfg);
  const auto rows = oracle::relabel(events, articles, t);

  std::map<std::string, std::size_t> want_dropped;
  std::size_t k = 0;
  for (const auto& r : rows) {
    if (r.verdict != "kept") {
      ++want_dropped[r.verdict];
      continue;
    }
    if (k >= built.examples.size()) {
      ADD_FAILURE() << "builder kept fewer rows than the oracle";
      return k;
    }
    const auto& ex = built.examples[k++];
    EXPECT_EQ(ex.seed_id, r.seed_id);
    EXPECT_EQ(ex.similar_id, r.similar_id);
    EXPECT_EQ(ex.combined_clicks, r.combined);
    EXPECT_EQ(ex.token_counts.tokens, r.title_tokens);
    EXPECT_EQ(ex.token_counts.counts, r.counts);
    EXPECT_EQ(ex.gold_tokens, r.gold);
    EXPECT_EQ(ex.similar_title, articles.at(r.similar_id).title);
    EXPECT_EQ(ex.seed_abstract, articles.at(r.seed_id).abstract_text);
  }
  EXPECT_EQ(k, built.examples.size());
  std::map<std::string, std::size_t> got_dropped;
  for (const auto& [reason, n] : built.dropped) got_dropped[std::string(drop_reason_name(reason))] = n;
  EXPECT_EQ(got_dropped, want_dropped);
  return k;
}

TEST(Builder, MatchesBruteForceOracle) {
  std::size_t kept = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto events = testing_support::random_events(100, seed, 5);
    const auto articles = testing_support::random_articles(4, seed + 100);  // P4 has no metadata
    kept += expect_matches_oracle(events, articles,
                                  {.p = 0.09, .cap = 0.4, .min_clicks = 2, .min_len = 7, .min_nonzero = 2});
    kept += expect_matches_oracle(events, articles,
                                  {.p = 0.2, .cap = 1.0, .min_clicks = 1, .min_len = 5, .min_nonzero = 1});
    expect_matches_oracle(events, articles, {});
  }
  EXPECT_GT(kept, 100u);
}

TEST(Builder, ThreadCountDoesNotMatter) {
  const auto events = testing_support::random_events(3000, 8, 12);
  const auto articles = testing_support::random_articles(12, 9);
  const auto aggs = aggregate_events(events, 1);
  BuildConfig one{.labeling = {}, .filter = {.min_clicks = 3, .min_title_len = 5, .min_nonzero = 1}, .threads = 1};
  BuildConfig many = one;
  many.threads = 6;
  EXPECT_EQ(build_examples(aggs, articles, one).examples, build_examples(aggs, articles, many).examples);
}

// ---------------------------------------------------------------------------

std::vector<PairExample> fake_examples(std::size_t n, std::size_t n_seeds) {
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto ex = make_example_texts("S" + std::to_string(i % n_seeds), "T" + std::to_string(i), "seed title",
                                 "", "similar title words here now ok done");
    out.push_back(ex);
  }
  return out;
}

TEST(Split, RatiosAtSingletonGroups) {
  auto ex = fake_examples(100, 100);
  auto s = split_dataset(ex, {0.8, 0.1, 0.1}, 42);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.dev.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
}

TEST(Split, DeterministicDisjointAndGrouped) {
  auto ex = fake_examples(500, 37);
  auto a = split_dataset(ex, {0.8, 0.1, 0.1}, 7);
  auto b = split_dataset(ex, {0.8, 0.1, 0.1}, 7);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size() + a.dev.size() + a.test.size(), ex.size());
  std::map<std::string, int> where;
  int idx = 0;
  for (const auto* part : {&a.train, &a.dev, &a.test}) {
    for (const auto& e : *part) {
      auto [it, inserted] = where.emplace(e.seed_id, idx);
      EXPECT_EQ(it->second, idx) << e.seed_id << " spans two splits";
    }
    ++idx;
  }
  EXPECT_FALSE(a.test.empty());
  auto c = split_dataset(ex, {0.8, 0.1, 0.1}, 8);
  EXPECT_NE(a.test, c.test);
}

TEST(Split, BadRatiosThrow) {
  auto ex = fake_examples(10, 10);
  EXPECT_THROW(split_dataset(ex, {0.5, 0.1, 0.1}, 1), Error);
}

// ---------------------------------------------------------------------------

TEST(Idf, HandValues) {
  std::vector<std::vector<std::string>> docs = {{"a", "b"}, {"b", "c"}, {"b", "d", "d"}};
  auto t = compute_idf(docs);
  EXPECT_EQ(t.doc_count(), 3u);
  EXPECT_NEAR(t.idf("a"), std::log(1.0 + 2.5 / 1.5), 1e-12);
  EXPECT_NEAR(t.idf("a"), 0.9808, 1e-4);
  EXPECT_NEAR(t.idf("b"), std::log(1.0 + 0.5 / 3.5), 1e-12);
  EXPECT_GT(t.idf("b"), 0.0);
  EXPECT_NEAR(t.idf("zzz"), std::log(1.0 + 3.5 / 0.5), 1e-12);
  EXPECT_EQ(t.doc_freq("d"), 1u);
  EXPECT_NEAR(t.avg_doc_len(), 7.0 / 3.0, 1e-12);
  EXPECT_THROW(compute_idf(std::vector<std::vector<std::string>>{}), Error);
}

TEST(DatasetJsonl, RoundTrip) {
  const auto events = testing_support::random_events(3000, 2, 10);
  const auto articles = testing_support::random_articles(10, 3);
  BuildConfig cfg{.labeling = {}, .filter = {.min_clicks = 3, .min_title_len = 5, .min_nonzero = 1}, .threads = 1};
  const auto built = build_examples(aggregate_events(events, 1), articles, cfg);
  ASSERT_FALSE(built.examples.empty());
  std::stringstream buf;
  write_dataset_jsonl(buf, built.examples);
  EXPECT_EQ(read_dataset_jsonl(buf), built.examples);
}

TEST(DatasetJsonl, RejectsGoldOutsideTitle) {
  std::istringstream in(
      R"({"seed_id":"a","similar_id":"b","seed_title":"x","seed_abstract":"","similar_title":"one two",)"
      R"("token_counts":{"one":3},"combined_clicks":3,"gold_tokens":["three"]})");
  EXPECT_THROW(read_dataset_jsonl(in), Error);
}

}  // namespace
}  // namespace hilite

#include "hilite/tagger.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hilite/common.hpp"
#include "hilite/synth.hpp"

namespace hilite {
namespace {

PairExample small_example() {
  auto ex = make_example_texts("S", "T", "Dose study", "Dose trial in adults.", "Dose response of dose curve.");
  ex.gold_tokens = {"dose"};
  return ex;
}

SubwordVocab vocab_for(const std::vector<PairExample>& exs) { return build_tagger_vocab(exs, 4000); }

TEST(TaggedInput, MarkersSegmentsAndLabels) {
  auto ex = small_example();
  auto vocab = vocab_for({ex});
  auto in = build_tagged_input(ex, vocab, 256);
  EXPECT_EQ(in.tokens.front(), "[CLS]");
  EXPECT_EQ(in.tokens[in.similar_begin - 1], "[SEP]");
  ASSERT_EQ(in.tokens.size(), in.labels.size());
  ASSERT_EQ(in.tokens.size(), in.segment_ids.size());
  for (std::size_t i = 0; i < in.tokens.size(); ++i) {
    EXPECT_EQ(in.segment_ids[i], i >= in.similar_begin ? 1 : 0);
    if (i < in.similar_begin) EXPECT_EQ(in.labels[i], 0);
  }
  // both occurrences of the gold word are labeled
  auto words = project_labels(in.similar, std::span<const int>(in.labels).subspan(in.similar_begin));
  EXPECT_EQ(words, (std::set<std::size_t>{0, 3}));
  EXPECT_EQ(in.abstract_truncated, 0u);
}

TEST(TaggedInput, TruncatesAbstractFirst) {
  auto ex = small_example();
  auto vocab = vocab_for({ex});
  auto full = build_tagged_input(ex, vocab, 256);
  const std::size_t sim = full.tokens.size() - full.similar_begin;
  auto tight = build_tagged_input(ex, vocab, full.tokens.size() - 2);
  EXPECT_EQ(tight.abstract_truncated, 2u);
  EXPECT_EQ(tight.tokens.size(), full.tokens.size() - 2);
  // similar title is never cut
  EXPECT_EQ(tight.tokens.size() - tight.similar_begin, sim);
  EXPECT_NO_THROW(build_tagged_input(ex, vocab, sim + 2));
  EXPECT_THROW(build_tagged_input(ex, vocab, sim + 1), Error);
}

TEST(Forward, ZeroWeightsGiveOneHalf) {
  std::vector<double> w(3, 0.0), x = {1, 2, 3, -4, 5, 6};
  for (double p : forward(w, x, 2)) EXPECT_DOUBLE_EQ(p, 0.5);
}

TaggerInstance toy_instance(std::vector<std::vector<double>> rows, std::vector<int> labels) {
  TaggerInstance t;
  t.rows = rows.size();
  for (auto& r : rows) t.features.insert(t.features.end(), r.begin(), r.end());
  t.labels = std::move(labels);
  return t;
}

TEST(Loss, LnTwoAtZero) {
  auto a = toy_instance({{1, 0}, {0, 1}, {1, 1}}, {1, 0, 1});
  std::vector<const TaggerInstance*> batch = {&a};
  std::vector<double> w = {0, 0};
  auto lg = loss_and_grad(w, batch);
  EXPECT_NEAR(lg.loss, std::numbers::ln2, 1e-12);
  EXPECT_EQ(lg.tokens, 3u);
}

TEST(Loss, NearZeroOnSeparableBatch) {
  auto a = toy_instance({{1, 1}, {-1, 1}, {2, 1}, {-3, 1}}, {1, 0, 1, 0});
  std::vector<const TaggerInstance*> batch = {&a};
  std::vector<double> w = {20, 0};
  EXPECT_LT(loss_and_grad(w, batch).loss, 1e-3);
}

TEST(Loss, GradientMatchesFiniteDifference) {
  Rng rng(8);
  std::vector<TaggerInstance> insts;
  for (int i = 0; i < 4; ++i) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int r = 0; r < 5; ++r) {
      rows.push_back({rng.uniform() * 2 - 1, rng.uniform() * 2 - 1, rng.uniform(), 1.0});
      labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    }
    insts.push_back(toy_instance(rows, labels));
  }
  std::vector<const TaggerInstance*> batch;
  for (auto& t : insts) batch.push_back(&t);
  std::vector<double> w = {0.3, -0.7, 1.1, -0.2};
  auto lg = loss_and_grad(w, batch);
  const double h = 1e-6;
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto up = w, down = w;
    up[j] += h;
    down[j] -= h;
    const double fd = (loss_and_grad(up, batch).loss - loss_and_grad(down, batch).loss) / (2 * h);
    EXPECT_NEAR(lg.grad[j], fd, 1e-6) << j;
  }
  EXPECT_EQ(loss_and_grad(w, batch, 4).grad, lg.grad);
}

TEST(Schedule, Endpoints) {
  TaggerConfig c;
  c.total_steps = 2000;
  EXPECT_EQ(c.effective_warmup(), 200u);
  EXPECT_DOUBLE_EQ(learning_rate(0, c), 0.0);
  EXPECT_DOUBLE_EQ(learning_rate(200, c), c.peak_lr());
  EXPECT_NEAR(learning_rate(100, c), c.peak_lr() / 2, 1e-15);
  EXPECT_NEAR(learning_rate(2000, c), 0.0, 1e-15);
  c.total_steps = 300;
  EXPECT_EQ(c.effective_warmup(), 100u);
  double prev = learning_rate(100, c);
  for (std::size_t s = 101; s <= 300; ++s) {
    EXPECT_LE(learning_rate(s, c), prev);
    prev = learning_rate(s, c);
  }
}

struct Fixture {
  std::vector<PairExample> train, dev;
  IdfTable idf;
  SubwordVocab vocab;
  FeatureResources res;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    auto all = generate_segment_examples(240, 3);
    f.train.assign(all.begin(), all.begin() + 200);
    f.dev.assign(all.begin() + 200, all.end());
    std::vector<std::vector<std::string>> docs;
    for (const auto& e : all) docs.push_back(lower_texts(e.similar_title_tokens));
    f.idf = compute_idf(docs);
    f.vocab = build_tagger_vocab(all);
    return f;
  }();
  return f;
}

TaggerConfig small_config() {
  TaggerConfig c;
  c.total_steps = 400;
  c.batch_size = 16;
  c.eval_every = 10;
  return c;
}

TEST(Train, DeterministicAcrossThreads) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  auto c = small_config();
  auto a = train_tagger(f.train, f.dev, f.vocab, res, c);
  c.threads = 4;
  auto b = train_tagger(f.train, f.dev, f.vocab, res, c);
  EXPECT_EQ(a.best.weights, b.best.weights);
  EXPECT_EQ(a.best_dev_f1, b.best_dev_f1);
}

TEST(Train, LossFallsAndLearnsSomething) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  auto r = train_tagger(f.train, f.dev, f.vocab, res, small_config());
  ASSERT_GE(r.log.size(), 5u);
  EXPECT_LT(r.log[4].train_loss, r.log[0].train_loss);
  EXPECT_LT(r.log.back().train_loss, std::numbers::ln2);
  EXPECT_GT(r.best_dev_f1, 0.5);
}

TEST(Train, FixedBatchLossFallsEveryStep) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  // batch == whole training set, so every step sees the same batch
  std::vector<PairExample> train(f.train.begin(), f.train.begin() + 16);
  auto c = small_config();
  c.batch_size = 16;
  c.total_steps = 500;
  c.eval_every = 1;
  auto r = train_tagger(train, f.dev, f.vocab, res, c);
  ASSERT_GE(r.log.size(), 51u);
  for (std::size_t s = 1; s <= 50; ++s) EXPECT_LT(r.log[s].train_loss, r.log[s - 1].train_loss) << s;
}

TEST(Train, SeparableSetReachesHighDevF1) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  TaggerConfig c;  // 2000 steps
  auto r = train_tagger(f.train, f.dev, f.vocab, res, c);
  EXPECT_GE(r.best_dev_f1, 0.95);
}

TEST(Train, HigherThresholdSelectsSubset) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  auto r = train_tagger(f.train, f.dev, f.vocab, res, small_config());
  TaggerModel m(r.best, f.vocab, res);
  for (const auto& ex : f.dev) {
    std::set<std::size_t> prev = m.predict_words(ex, 0.0);
    EXPECT_EQ(prev.size(), ex.similar_title_tokens.size());
    for (double t = 0.1; t <= 1.0; t += 0.1) {
      auto cur = m.predict_words(ex, t);
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST(Train, EmptySetsThrow) {
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  std::vector<PairExample> none;
  EXPECT_THROW(train_tagger(none, f.dev, f.vocab, res, small_config()), Error);
  EXPECT_THROW(train_tagger(f.train, none, f.vocab, res, small_config()), Error);
}

TEST(Features, MergedDropsOneColumn) {
  EXPECT_EQ(feature_names(FeatureSet::kSplit).size(), 9u);
  EXPECT_EQ(feature_names(FeatureSet::kMerged).size(), 8u);
  const auto& f = fixture();
  FeatureResources res{&f.idf, &default_stopwords(), nullptr};
  const auto& ex = f.train[0];
  EXPECT_EQ(word_features(ex, res, FeatureSet::kSplit).size(), 9 * ex.similar_title_tokens.size());
  EXPECT_EQ(word_features(ex, res, FeatureSet::kMerged).size(), 8 * ex.similar_title_tokens.size());
  EXPECT_EQ(parse_feature_set(feature_set_name(FeatureSet::kMerged)), FeatureSet::kMerged);
}

TEST(Checkpoint, RoundTrip) {
  TaggerParams p;
  p.feature_names = feature_names(FeatureSet::kSplit);
  p.weights = {0.1, -2.5, 3.25, 0, 1e-9, 7, -1, 0.5, 0.125};
  p.step = 77;
  p.config.lr_scale = 150;
  std::stringstream buf;
  save_checkpoint(buf, p, "vocab.txt");
  auto back = load_checkpoint(buf);
  EXPECT_EQ(back.vocab_file, "vocab.txt");
  EXPECT_EQ(back.params.weights, p.weights);
  EXPECT_EQ(back.params.feature_names, p.feature_names);
  EXPECT_EQ(back.params.step, 77u);
  EXPECT_EQ(back.params.config.lr_scale, 150);
  std::istringstream bad(R"({"format":"other"})");
  EXPECT_THROW(load_checkpoint(bad), Error);
}

}  // namespace
}  // namespace hilite

#include "hilite/report.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "hilite/common.hpp"

namespace hilite {
namespace {

const char* kCovidTitle = "Safety and Efficacy of the BNT162b2 mRNA Covid-19 Vaccine.";

TEST(Highlight, MarkdownGolden) {
  auto toks = word_tokenize(kCovidTitle);
  EXPECT_EQ(highlight_text(kCovidTitle, toks, {7, 8}, RenderFormat::kMarkdown),
            "Safety and Efficacy of the BNT162b2 mRNA **Covid-19** **Vaccine**.");
}

TEST(Highlight, PlainAndHtml) {
  const std::string text = "A <b> & dose, dose.";
  auto toks = word_tokenize(text);
  EXPECT_EQ(highlight_text(text, toks, {3, 5}, RenderFormat::kPlain), "A <b> & [dose], [dose].");
  EXPECT_EQ(highlight_text(text, toks, {1, 3}, RenderFormat::kHtml),
            "A <mark>&lt;b&gt;</mark> &amp; <mark>dose</mark>, dose.");
  EXPECT_EQ(highlight_text(text, toks, {}, RenderFormat::kMarkdown), text);
  EXPECT_THROW(highlight_text(text, toks, {42}, RenderFormat::kPlain), Error);
}

TEST(Highlight, OneMarkerPerPosition) {
  Rng rng(1);
  const std::string text = "dose response of dose curve in dose trials.";
  auto toks = word_tokenize(text);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::size_t> pos;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (rng.bernoulli(0.4)) pos.insert(i);
    }
    auto out = highlight_text(text, toks, pos, RenderFormat::kPlain);
    EXPECT_EQ(static_cast<std::size_t>(std::count(out.begin(), out.end(), '[')), pos.size());
    // removing the markers restores the source
    std::string stripped;
    for (char c : out) {
      if (c != '[' && c != ']') stripped += c;
    }
    EXPECT_EQ(stripped, text);
  }
}

TEST(RenderCase, RowsPerModelAndGold) {
  auto ex = make_example_texts("S", "T", "Pfizer-BioNTech COVID-19 Vaccine", "", kCovidTitle);
  ex.gold_tokens = {"bnt162b2", "covid-19", "vaccine"};
  std::vector<Prediction> preds = {make_prediction(ex, "tagger", {5, 7, 8}), make_prediction(ex, "all", {})};
  auto md = render_case(ex, preds, RenderFormat::kMarkdown);
  EXPECT_NE(md.find("tagger"), std::string::npos);
  EXPECT_NE(md.find("gold"), std::string::npos);
  EXPECT_NE(md.find("**BNT162b2** mRNA **Covid-19** **Vaccine**."), std::string::npos);
  EXPECT_NE(md.find(kCovidTitle), std::string::npos);  // the empty prediction renders unmarked
}

std::vector<PairExample> many(std::size_t n) {
  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_example_texts("S" + std::to_string(i), "T", "seed title", "", "dose response curve."));
  }
  return out;
}

std::vector<Prediction> outputs(const std::vector<PairExample>& exs, const std::string& model,
                                std::set<std::size_t> sel) {
  std::vector<Prediction> out;
  for (const auto& ex : exs) out.push_back(make_prediction(ex, model, sel));
  return out;
}

TEST(AbStudy, DeterministicAndBlind) {
  auto exs = many(100);
  auto a = outputs(exs, "zebramodel", {0});
  auto b = outputs(exs, "yakmodel", {1});
  auto s1 = emit_ab_study(exs, a, b, 7);
  auto s2 = emit_ab_study(exs, a, b, 7);
  EXPECT_EQ(s1.sheet, s2.sheet);
  EXPECT_EQ(s1.key, s2.key);
  EXPECT_NE(emit_ab_study(exs, a, b, 8).key, s1.key);
  EXPECT_EQ(s1.sheet.find("zebramodel"), std::string::npos);
  EXPECT_EQ(s1.sheet.find("yakmodel"), std::string::npos);
  EXPECT_EQ(s1.sheet.substr(0, s1.sheet.find('\n')),
            "instance_id,seed_title,title_left_highlighted,title_right_highlighted");
}

TEST(AbStudy, InversionRateNearHalf) {
  auto exs = many(10000);
  auto st = emit_ab_study(exs, outputs(exs, "a", {0}), outputs(exs, "b", {1}), 42);
  std::istringstream key(st.key);
  std::string line;
  std::getline(key, line);
  std::size_t rows = 0, inverted = 0;
  while (std::getline(key, line)) {
    auto f = csv_parse_line(line);
    ++rows;
    inverted += f[1] == "b";
  }
  EXPECT_EQ(rows, 10000u);
  EXPECT_NEAR(static_cast<double>(inverted) / 10000.0, 0.5, 0.02);
}

TEST(AbStudy, CoverageMismatchThrows) {
  auto exs = many(5);
  auto a = outputs(exs, "a", {0});
  auto b = outputs(exs, "b", {1});
  b.pop_back();
  EXPECT_THROW(emit_ab_study(exs, a, b, 1), Error);
  auto mixed = outputs(exs, "a", {0});
  mixed[0].model = "c";
  EXPECT_THROW(emit_ab_study(exs, mixed, outputs(exs, "b", {1}), 1), Error);
}

TEST(Tally, CountsPreferences) {
  std::istringstream key("instance_id,left_model,right_model\n1,tagger,gpt\n2,gpt,tagger\n3,tagger,gpt\n");
  std::istringstream marked("instance_id,choice\n1,left\n2,left\n3,neutral\n");
  auto t = tally_preferences(marked, key);
  EXPECT_EQ(t.model_a, "gpt");
  EXPECT_EQ(t.model_b, "tagger");
  EXPECT_EQ(t.prefer_a, 1u);
  EXPECT_EQ(t.prefer_b, 1u);
  EXPECT_EQ(t.neutral, 1u);
  std::ostringstream out;
  write_tally_csv(out, t);
  EXPECT_EQ(out.str(), "preference,count\ngpt,1\ntagger,1\nneutral,1\n");
}

TEST(Tally, RejectsBadInput) {
  const std::string key = "instance_id,left_model,right_model\n1,a,b\n";
  for (const char* m : {"id,choice\n9,left\n", "id,choice\n1,up\n", "id,choice\n1,left\n1,right\n"}) {
    std::istringstream k(key), mk(m);
    EXPECT_THROW(tally_preferences(mk, k), Error) << m;
  }
  std::istringstream k3("h\n1,a,b\n2,a,c\n"), mk("id,choice\n");
  EXPECT_THROW(tally_preferences(mk, k3), Error);
}

TEST(CorpusStats, ThresholdSizesDecrease) {
  std::vector<PairExample> exs;
  // power-law-ish click counts
  for (std::int64_t i = 1; i <= 400; ++i) {
    auto ex = make_example_texts("S" + std::to_string(i), "T", "x", "", "a b c d e f g h.");
    ex.combined_clicks = 20 + 4000 / i;
    exs.push_back(std::move(ex));
  }
  auto s = corpus_stats(exs);
  EXPECT_EQ(s.pairs, 400u);
  ASSERT_EQ(s.size_at_threshold.size(), 3u);
  EXPECT_GT(s.size_at_threshold[0].second, s.size_at_threshold[1].second);
  EXPECT_GT(s.size_at_threshold[1].second, s.size_at_threshold[2].second);
  EXPECT_TRUE(s.sizes_monotone);
  EXPECT_EQ(s.mean_title_length, 9.0);
  std::size_t total = 0;
  for (const auto& [label, n] : s.click_histogram) total += n;
  EXPECT_EQ(total, 400u);
  std::ostringstream out;
  write_corpus_stats(out, s);
  EXPECT_NE(out.str().find("reference 17.5"), std::string::npos);
}

TEST(CorpusStats, SinglePair) {
  auto ex = make_example_texts("S", "T", "x", "", "a b.");
  ex.combined_clicks = 25;
  auto s = corpus_stats(std::span<const PairExample>(&ex, 1));
  EXPECT_EQ(s.pairs, 1u);
  EXPECT_EQ(s.title_length_counts, (std::map<std::size_t, std::size_t>{{3, 1}}));
}

}  // namespace
}  // namespace hilite

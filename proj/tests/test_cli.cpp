#include "hilite/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace hilite {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("hilite_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Cli, HelpIsOk) { EXPECT_EQ(run({"--help"}).code, cli::kExitOk); }

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  auto r = run({"eval", "--pred", "x.jsonl"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--data"), std::string::npos);
  EXPECT_EQ(run({"explain", "--data", "d", "--backend", "nonsense"}).code, cli::kExitUsage);
}

TEST(Cli, MissingFileExitsOneWithPath) {
  auto r = run({"eval", "--data", "/no/such/dataset.jsonl", "--pred", "/no/such/p.jsonl", "--out", "/tmp/x.csv"});
  EXPECT_EQ(r.code, cli::kExitFailure);
  EXPECT_NE(r.err.find("/no/such/dataset.jsonl"), std::string::npos) << r.err;
}

// synth -> ingest -> build -> explain -> train -> predict -> eval -> report
std::map<std::string, std::string> pipeline(const fs::path& d) {
  auto p = [&](const std::string& f) { return (d / f).string(); };
  auto ok = [](const Result& r) { ASSERT_EQ(r.code, 0) << r.err; };
  ok(run({"--seed", "7", "--threads", "2", "synth", "--out-dir", p("s"), "--articles", "600", "--fillers",
          "1500", "--sessions", "60000", "--segment-examples", "50"}));
  ok(run({"--threads", "2", "ingest", "--log", p("s/log.tsv"), "--out", p("agg.jsonl")}));
  ok(run({"--seed", "7", "build", "--aggregates", p("agg.jsonl"), "--articles", p("s/articles.tsv"),
          "--out-dir", p("d")}));
  const std::vector<std::string> lex = {"--articles", p("s/articles.tsv"), "--embeddings", p("s/embeddings.txt")};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), lex.begin(), lex.end());
    return a;
  };
  for (const std::string b : {"all", "overlap", "bm25", "embed"}) {
    ok(run(with({"explain", "--data", p("d/test.jsonl"), "--backend", b, "--out", p("p_" + b + ".jsonl")})));
  }
  ok(run(with({"--seed", "7", "--threads", "2", "train", "--train", p("d/train.jsonl"), "--dev",
               p("d/dev.jsonl"), "--out-dir", p("ck"), "--steps", "200", "--eval-every", "50"})));
  ok(run(with({"predict", "--data", p("d/test.jsonl"), "--checkpoint", p("ck/checkpoint.json"), "--out",
               p("p_tagger.jsonl")})));
  ok(run({"eval", "--data", p("d/test.jsonl"), "--pred", p("p_all.jsonl"), p("p_overlap.jsonl"),
          p("p_bm25.jsonl"), p("p_embed.jsonl"), p("p_tagger.jsonl"), "--out", p("metrics.csv")}));
  ok(run({"report", "case", "--data", p("d/test.jsonl"), "--pred", p("p_bm25.jsonl"), p("p_tagger.jsonl"),
          "--limit", "3", "--out", p("cases.md")}));
  ok(run({"--seed", "3", "report", "ab", "--data", p("d/test.jsonl"), "--a", p("p_bm25.jsonl"), "--b",
          p("p_tagger.jsonl"), "--sheet", p("sheet.csv"), "--key", p("key.csv")}));
  ok(run({"report", "stats", "--data", p("d/train.jsonl"), p("d/test.jsonl"), "--out", p("stats.txt")}));

  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(d)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), d).string()] = slurp(e.path());
  }
  return files;
}

TEST(Cli, PipelineIsByteIdenticalOnRerun) {
  auto a = pipeline(scratch("a"));
  auto b = pipeline(scratch("b"));
  ASSERT_FALSE(a.empty());
  for (const char* f : {"d/train.jsonl", "d/test.jsonl", "ck/checkpoint.json", "ck/train_log.csv", "metrics.csv",
                        "cases.md", "sheet.csv", "key.csv", "stats.txt", "s/segment.jsonl"}) {
    ASSERT_TRUE(a.count(f)) << f;
    EXPECT_FALSE(a.at(f).empty()) << f;
  }
  EXPECT_EQ(a, b);
  const auto& csv = a.at("metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,granularity,stratum,R,P,F1,L,N");
  EXPECT_NE(csv.find("bottom_third"), std::string::npos);
  EXPECT_EQ(a.at("sheet.csv").find("tagger"), std::string::npos);
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  auto d = scratch("cfg");
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "seed=11\n";
  }
  auto r = run({"--config", (d / "run.cfg").string(), "synth", "--out-dir", (d / "s").string(), "--articles",
                "100", "--fillers", "500", "--sessions", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto r2 = run({"--seed", "11", "synth", "--out-dir", (d / "t").string(), "--articles", "100", "--fillers",
                 "500", "--sessions", "100"});
  ASSERT_EQ(r2.code, 0);
  EXPECT_EQ(slurp(d / "s/articles.tsv"), slurp(d / "t/articles.tsv"));
}

}  // namespace
}  // namespace hilite

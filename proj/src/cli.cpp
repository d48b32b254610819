#include "hilite/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "hilite/common.hpp"
#include "hilite/dataset.hpp"
#include "hilite/eval.hpp"
#include "hilite/explain.hpp"
#include "hilite/log_ingest.hpp"
#include "hilite/report.hpp"
#include "hilite/synth.hpp"
#include "hilite/tagger.hpp"

namespace hilite::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 0;
  unsigned workers() const { return threads == 0 ? default_threads() : threads; }
};

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory " + dir + ": " + ec.message());
}

template <typename F>
void write_file(const std::string& path, F&& body) {
  auto out = open_output(path);
  body(out);
  out.flush();
  if (!out) throw Error("write failed: " + path);
}

std::vector<PairExample> load_dataset(const std::string& path) { return read_dataset_file(path); }

std::vector<Prediction> load_predictions(const std::string& path) {
  auto in = open_input(path);
  return read_predictions_jsonl(in);
}

/// Shared lexical resources for the backends and the tagger.
struct Lexicon {
  IdfTable idf;
  StopwordSet stopwords;
  std::optional<EmbeddingTable> embeddings;

  FeatureResources features() const {
    return {&idf, &stopwords, embeddings ? &*embeddings : nullptr};
  }
};

struct LexiconPaths {
  std::string articles;
  std::string stopwords;
  std::string embeddings;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--articles", articles,
                    "article metadata TSV for IDF (default: titles in the dataset)");
    cmd->add_option("--stopwords", stopwords, "stopword list, one per line (default: built-in)");
    cmd->add_option("--embeddings", embeddings, "word vectors in text format");
  }
};

/// IDF comes from the article table when given, otherwise from the distinct
/// titles of the supplied examples.
Lexicon load_lexicon(const LexiconPaths& paths, std::span<const std::vector<PairExample>* const> sets) {
  Lexicon lex;
  if (!paths.articles.empty()) {
    auto in = open_input(paths.articles);
    lex.idf = idf_from_titles(read_articles_tsv(in));
  } else {
    ArticleTable titles;
    for (const auto* set : sets) {
      for (const auto& ex : *set) {
        titles.emplace(ex.seed_id, Article{ex.seed_id, ex.seed_title, ex.seed_abstract});
        titles.emplace(ex.similar_id, Article{ex.similar_id, ex.similar_title, ""});
      }
    }
    if (titles.empty()) throw Error("cannot compute IDF: no articles and an empty dataset");
    lex.idf = idf_from_titles(titles);
  }
  if (!paths.stopwords.empty()) {
    auto in = open_input(paths.stopwords);
    lex.stopwords = load_stopwords(in);
  } else {
    lex.stopwords = default_stopwords();
  }
  if (!paths.embeddings.empty()) {
    auto in = open_input(paths.embeddings);
    lex.embeddings = EmbeddingTable::load(in);
  }
  return lex;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

void add_synth(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("synth", "generate a synthetic corpus and click log");
  auto cfg = std::make_shared<SynthConfig>();
  auto out_dir = std::make_shared<std::string>();
  auto segment = std::make_shared<std::size_t>(0);
  cmd->add_option("--out-dir", *out_dir, "output directory")->required();
  cmd->add_option("--articles", cfg->n_articles, "number of articles")->capture_default_str();
  cmd->add_option("--articles-per-cluster", cfg->articles_per_cluster)->capture_default_str();
  cmd->add_option("--primary-topics", cfg->primary_topics)->capture_default_str();
  cmd->add_option("--secondary-topics", cfg->secondary_topics)->capture_default_str();
  cmd->add_option("--extra-topic-pool", cfg->extra_topic_pool)->capture_default_str();
  cmd->add_option("--max-extra-topics", cfg->max_extra_topics)->capture_default_str();
  cmd->add_option("--fields", cfg->n_fields)->capture_default_str();
  cmd->add_option("--field-words", cfg->field_words_per_field)->capture_default_str();
  cmd->add_option("--fillers", cfg->n_fillers)->capture_default_str();
  cmd->add_option("--title-min", cfg->title_len_min)->capture_default_str();
  cmd->add_option("--title-max", cfg->title_len_max)->capture_default_str();
  cmd->add_option("--title-mean", cfg->title_len_mean)->capture_default_str();
  cmd->add_option("--abstract-len", cfg->abstract_len)->capture_default_str();
  cmd->add_option("--zipf", cfg->zipf_exponent)->capture_default_str();
  cmd->add_option("--sessions", cfg->sessions)->capture_default_str();
  cmd->add_option("--max-clicks", cfg->max_clicks)->capture_default_str();
  cmd->add_option("--full-primary-query-p", cfg->full_primary_query_p)->capture_default_str();
  cmd->add_option("--secondary-query-p", cfg->secondary_query_p)->capture_default_str();
  cmd->add_option("--extra-query-p", cfg->extra_query_p)->capture_default_str();
  cmd->add_option("--embedding-dim", cfg->embedding_dim)->capture_default_str();
  cmd->add_option("--segment-examples", *segment,
                  "also write N title-vs-abstract examples to segment.jsonl");
  cmd->callback([&g, &out, cfg, out_dir, segment] {
    cfg->seed = g.seed;
    ensure_dir(*out_dir);
    const auto corpus = generate_corpus(*cfg);
    const auto events = generate_sessions(corpus, *cfg);
    write_file(join_path(*out_dir, "articles.tsv"),
               [&](std::ostream& o) { write_articles_tsv(o, corpus.articles); });
    write_file(join_path(*out_dir, "log.tsv"), [&](std::ostream& o) {
      for (const auto& e : events) write_log_line(o, e);
    });
    write_file(join_path(*out_dir, "topics.tsv"),
               [&](std::ostream& o) { write_topic_map(o, corpus); });
    write_file(join_path(*out_dir, "embeddings.txt"),
               [&](std::ostream& o) { corpus.embeddings.save(o); });
    write_file(join_path(*out_dir, "stopwords.txt"), [&](std::ostream& o) {
      for (const auto& w : corpus.stopwords) o << w << '\n';
    });
    if (*segment > 0) {
      const auto seg = generate_segment_examples(*segment, g.seed);
      write_file(join_path(*out_dir, "segment.jsonl"),
                 [&](std::ostream& o) { write_dataset_jsonl(o, seg); });
    }
    out << "synth: " << corpus.articles.size() << " articles, " << events.size() << " click events -> "
        << *out_dir << '\n';
  });
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

void add_ingest(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("ingest", "aggregate a raw click log into pair counts");
  auto log = std::make_shared<std::string>();
  auto dest = std::make_shared<std::string>();
  cmd->add_option("--log", *log, "raw log TSV")->required();
  cmd->add_option("--out", *dest, "aggregates JSON Lines")->required();
  cmd->callback([&g, &out, log, dest] {
    auto in = open_input(*log);
    const auto parsed = parse_log(in);
    const auto aggs = aggregate_events(parsed.events, g.workers());
    write_file(*dest, [&](std::ostream& o) { write_aggregates_jsonl(o, aggs); });
    out << "ingest: " << parsed.events.size() << " events (" << parsed.malformed
        << " malformed rows skipped), " << aggs.size() << " pairs -> " << *dest << '\n';
  });
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

void add_build(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("build", "label, filter and split pairs into datasets");
  struct Opts {
    std::string aggregates, articles, out_dir;
    BuildConfig config;
    std::vector<double> ratios{0.8, 0.1, 0.1};
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--aggregates", o->aggregates, "aggregates JSON Lines")->required();
  cmd->add_option("--articles", o->articles, "article metadata TSV")->required();
  cmd->add_option("--out-dir", o->out_dir, "output directory")->required();
  cmd->add_option("--p", o->config.labeling.threshold, "softmax threshold")->capture_default_str();
  cmd->add_option("--cap", o->config.labeling.cap_fraction, "max fraction of title tokens")
      ->capture_default_str();
  cmd->add_option("--min-clicks", o->config.filter.min_clicks)->capture_default_str();
  cmd->add_option("--min-title-len", o->config.filter.min_title_len)->capture_default_str();
  cmd->add_option("--min-nonzero", o->config.filter.min_nonzero)->capture_default_str();
  cmd->add_option("--ratios", o->ratios, "train dev test fractions")->expected(3);
  cmd->callback([&g, &out, o] {
    auto agg_in = open_input(o->aggregates);
    const auto aggs = read_aggregates_jsonl(agg_in);
    auto art_in = open_input(o->articles);
    const auto articles = read_articles_tsv(art_in);
    o->config.threads = g.workers();
    const auto built = build_examples(aggs, articles, o->config);
    const auto splits =
        split_dataset(built.examples, {o->ratios[0], o->ratios[1], o->ratios[2]}, g.seed);
    ensure_dir(o->out_dir);
    for (auto [name, set] : {std::pair{"train.jsonl", &splits.train},
                             std::pair{"dev.jsonl", &splits.dev}, std::pair{"test.jsonl", &splits.test}}) {
      write_file(join_path(o->out_dir, name), [&](std::ostream& os) { write_dataset_jsonl(os, *set); });
    }
    write_file(join_path(o->out_dir, "build_stats.txt"), [&](std::ostream& os) {
      os << "pairs_in\t" << aggs.size() << "\nkept\t" << built.examples.size() << '\n';
      for (const auto& [reason, n] : built.dropped) os << "dropped_" << drop_reason_name(reason) << '\t' << n << '\n';
      os << "train\t" << splits.train.size() << "\ndev\t" << splits.dev.size() << "\ntest\t"
         << splits.test.size() << '\n';
    });
    out << "build: " << built.examples.size() << " of " << aggs.size() << " pairs kept (train "
        << splits.train.size() << ", dev " << splits.dev.size() << ", test " << splits.test.size()
        << ") -> " << o->out_dir << '\n';
  });
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

void add_train(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("train", "train the token tagger");
  struct Opts {
    std::string train, dev, out_dir, features = "split";
    LexiconPaths lex;
    TaggerConfig config;
    std::size_t vocab_size = 8000;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--train", o->train, "training JSON Lines")->required();
  cmd->add_option("--dev", o->dev, "dev JSON Lines")->required();
  cmd->add_option("--out-dir", o->out_dir, "checkpoint directory")->required();
  o->lex.add_to(cmd);
  cmd->add_option("--features", o->features, "split | merged")->capture_default_str();
  cmd->add_option("--steps", o->config.total_steps)->capture_default_str();
  cmd->add_option("--warmup", o->config.warmup_steps, "0 = max(100, steps/10)")->capture_default_str();
  cmd->add_option("--batch", o->config.batch_size)->capture_default_str();
  cmd->add_option("--eval-every", o->config.eval_every)->capture_default_str();
  cmd->add_option("--lr-scale", o->config.lr_scale, "peak lr = 5e-5 * scale")->capture_default_str();
  cmd->add_option("--max-len", o->config.max_len)->capture_default_str();
  cmd->add_option("--threshold", o->config.decision_threshold)->capture_default_str();
  cmd->add_option("--vocab-size", o->vocab_size)->capture_default_str();
  cmd->callback([&g, &out, o] {
    auto fs_opt = parse_feature_set(o->features);
    if (!fs_opt) throw CLI::ValidationError("--features", "expected split or merged");
    o->config.features = *fs_opt;
    o->config.seed = g.seed;
    o->config.threads = g.workers();
    const auto train = load_dataset(o->train);
    const auto dev = load_dataset(o->dev);
    const std::vector<PairExample>* sets[] = {&train, &dev};
    const auto lex = load_lexicon(o->lex, sets);
    const auto vocab = build_tagger_vocab(train, o->vocab_size);
    const auto result = train_tagger(train, dev, vocab, lex.features(), o->config);
    ensure_dir(o->out_dir);
    write_file(join_path(o->out_dir, "vocab.txt"), [&](std::ostream& os) { vocab.save(os); });
    write_file(join_path(o->out_dir, "checkpoint.json"),
               [&](std::ostream& os) { save_checkpoint(os, result.best, "vocab.txt"); });
    write_file(join_path(o->out_dir, "train_log.csv"),
               [&](std::ostream& os) { write_train_log_csv(os, result.log); });
    out << "train: best dev F1 " << format_fixed(100.0 * result.best_dev_f1, 2) << " at step "
        << result.best.step << " -> " << o->out_dir << '\n';
  });
}

// ---------------------------------------------------------------------------
// explain / predict
// ---------------------------------------------------------------------------

struct ExplainOpts {
  std::string data, dest, backend = "bm25", select = "topk", scores, checkpoint;
  LexiconPaths lex;
  ExplainConfig config;
};

void run_explain(const Globals& g, std::ostream& out, ExplainOpts& o, bool k_given) {
  auto backend = parse_backend(o.backend);
  if (!backend) throw CLI::ValidationError("--backend", "unknown backend '" + o.backend + "'");
  auto selection = parse_selection(o.select);
  if (!selection) throw CLI::ValidationError("--select", "expected topk or softmax");
  o.config.backend = *backend;
  o.config.selection = *selection;
  if (o.config.generative && !k_given) o.config.k = 4;

  const auto examples = load_dataset(o.data);
  const std::vector<PairExample>* sets[] = {&examples};
  const auto lex = load_lexicon(o.lex, sets);
  ExplainResources res{&lex.idf, &lex.stopwords, lex.embeddings ? &*lex.embeddings : nullptr};

  std::optional<ExternalScores> external;
  if (!o.scores.empty()) {
    auto in = open_input(o.scores);
    external = load_external_scores(in);
    res.external = &*external;
  }
  std::unique_ptr<TaggerModel> tagger;
  if (!o.checkpoint.empty()) {
    auto in = open_input(o.checkpoint);
    auto ckpt = load_checkpoint(in);
    auto vocab_path = fs::path(ckpt.vocab_file);
    if (vocab_path.is_relative()) vocab_path = fs::path(o.checkpoint).parent_path() / vocab_path;
    auto vin = open_input(vocab_path.string());
    tagger = std::make_unique<TaggerModel>(std::move(ckpt.params), SubwordVocab::load(vin), lex.features());
    res.tagger = tagger.get();
  }

  const auto run = explain_all(examples, o.config, res, g.workers());
  write_file(o.dest, [&](std::ostream& os) { write_predictions_jsonl(os, run.predictions); });
  out << "explain: " << run.predictions.size() << " predictions";
  if (run.skipped) out << " (" << run.skipped << " pairs without external scores skipped)";
  if (external && external->duplicate_lines) {
    out << " (" << external->duplicate_lines << " duplicate score lines replaced)";
  }
  out << " -> " << o.dest << '\n';
}

void add_explain(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("explain", "highlight similar-title tokens with a backend");
  auto o = std::make_shared<ExplainOpts>();
  cmd->add_option("--data", o->data, "dataset JSON Lines")->required();
  cmd->add_option("--out", o->dest, "predictions JSON Lines")->required();
  cmd->add_option("--backend", o->backend, "all | overlap | bm25 | embed | external | tagger")
      ->capture_default_str();
  cmd->add_option("--select", o->select, "topk | softmax")->capture_default_str();
  auto* k = cmd->add_option("--k", o->config.k, "tokens kept by topk")->capture_default_str();
  cmd->add_option("--p", o->config.threshold.threshold, "softmax threshold")->capture_default_str();
  cmd->add_option("--cap", o->config.threshold.cap_fraction)->capture_default_str();
  cmd->add_option("--idf-floor", o->config.idf_floor)->capture_default_str();
  cmd->add_flag("--seed-abstract", o->config.seed_with_abstract, "use seed title + abstract");
  cmd->add_option("--scores", o->scores, "external token scores JSON Lines");
  cmd->add_flag("--generative", o->config.generative, "external scores from a generative model (k=4)");
  cmd->add_option("--checkpoint", o->checkpoint, "tagger checkpoint.json");
  cmd->add_option("--model-name", o->config.model_name, "name written into predictions");
  o->lex.add_to(cmd);
  cmd->callback([&g, &out, o, k] { run_explain(g, out, *o, k->count() > 0); });

  auto* pred = app.add_subcommand("predict", "run a trained tagger (explain --backend tagger)");
  auto p = std::make_shared<ExplainOpts>();
  p->backend = "tagger";
  pred->add_option("--data", p->data, "dataset JSON Lines")->required();
  pred->add_option("--out", p->dest, "predictions JSON Lines")->required();
  pred->add_option("--checkpoint", p->checkpoint, "tagger checkpoint.json")->required();
  pred->add_option("--model-name", p->config.model_name, "name written into predictions");
  p->lex.add_to(pred);
  pred->callback([&g, &out, p] { run_explain(g, out, *p, false); });
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

void add_eval(CLI::App& app, std::ostream& out) {
  auto* cmd = app.add_subcommand("eval", "score predictions against gold");
  struct Opts {
    std::string data, dest, pair_scores;
    std::vector<std::string> preds;
    bool micro = false, no_strata = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--data", o->data, "dataset JSON Lines")->required();
  cmd->add_option("--pred", o->preds, "prediction files (one or more)")->required();
  cmd->add_option("--out", o->dest, "metrics CSV")->required();
  cmd->add_option("--pair-scores", o->pair_scores, "pair similarity scores for quintile strata");
  cmd->add_flag("--micro", o->micro, "pool counts instead of averaging per instance");
  cmd->add_flag("--no-strata", o->no_strata, "only the 'all' rows");
  cmd->callback([&out, o] {
    const auto examples = load_dataset(o->data);
    std::vector<Stratum> strata;
    if (!o->no_strata) strata = stratify_by_clicks(examples);
    if (!o->pair_scores.empty()) {
      auto in = open_input(o->pair_scores);
      auto sim = stratify_by_similarity(examples, load_pair_scores(in));
      if (sim.missing) out << "eval: " << sim.missing << " pairs have no similarity score\n";
      strata.insert(strata.end(), sim.strata.begin(), sim.strata.end());
    }
    std::vector<EvalRow> rows;
    for (const auto& path : o->preds) {
      const auto preds = load_predictions(path);
      std::vector<std::string> models;
      for (const auto& p : preds) {
        if (std::find(models.begin(), models.end(), p.model) == models.end()) models.push_back(p.model);
      }
      for (const auto& m : models) {
        auto summary = evaluate_model(examples, preds, m, strata, {o->micro});
        if (summary.missing_predictions) {
          out << "eval: " << m << " has no prediction for " << summary.missing_predictions << " pairs\n";
        }
        if (summary.empty_gold_excluded) {
          out << "eval: " << m << ": " << summary.empty_gold_excluded
              << " pairs with empty gold excluded\n";
        }
        rows.insert(rows.end(), summary.rows.begin(), summary.rows.end());
      }
    }
    write_file(o->dest, [&](std::ostream& os) { write_metrics_csv(os, rows); });
    out << "eval: " << rows.size() << " rows (" << (o->micro ? "micro" : "macro") << ") -> " << o->dest
        << '\n';
  });
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void add_report(CLI::App& app, const Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("report", "case studies, A/B sheets and corpus statistics");
  cmd->require_subcommand(1);

  {
    auto* c = cmd->add_subcommand("case", "render highlighted titles per model");
    struct Opts {
      std::string data, dest, format = "markdown";
      std::vector<std::string> preds;
      std::size_t limit = 20;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--data", o->data)->required();
    c->add_option("--pred", o->preds, "prediction files")->required();
    c->add_option("--format", o->format, "plain | markdown | html")->capture_default_str();
    c->add_option("--limit", o->limit, "number of pairs")->capture_default_str();
    c->add_option("--out", o->dest)->required();
    c->callback([&out, o] {
      auto fmt = parse_render_format(o->format);
      if (!fmt) throw CLI::ValidationError("--format", "expected plain, markdown or html");
      const auto examples = load_dataset(o->data);
      std::vector<std::vector<Prediction>> runs;
      for (const auto& p : o->preds) runs.push_back(load_predictions(p));
      write_file(o->dest, [&](std::ostream& os) {
        std::size_t n = 0;
        for (const auto& ex : examples) {
          if (n++ == o->limit) break;
          std::vector<Prediction> row;
          for (const auto& run : runs) {
            for (const auto& p : run) {
              if (p.seed_id == ex.seed_id && p.similar_id == ex.similar_id) row.push_back(p);
            }
          }
          os << render_case(ex, row, *fmt) << '\n';
        }
      });
      out << "report case -> " << o->dest << '\n';
    });
  }
  {
    auto* c = cmd->add_subcommand("ab", "blinded side-by-side preference sheet");
    struct Opts {
      std::string data, a, b, sheet, key;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--data", o->data)->required();
    c->add_option("--a", o->a, "predictions of model A")->required();
    c->add_option("--b", o->b, "predictions of model B")->required();
    c->add_option("--sheet", o->sheet, "blinded sheet CSV")->required();
    c->add_option("--key", o->key, "answer key CSV")->required();
    c->callback([&g, &out, o] {
      const auto examples = load_dataset(o->data);
      const auto study = emit_ab_study(examples, load_predictions(o->a), load_predictions(o->b), g.seed);
      write_file(o->sheet, [&](std::ostream& os) { os << study.sheet; });
      write_file(o->key, [&](std::ostream& os) { os << study.key; });
      out << "report ab: " << examples.size() << " instances -> " << o->sheet << ", " << o->key << '\n';
    });
  }
  {
    auto* c = cmd->add_subcommand("tally", "count preferences from a marked sheet");
    struct Opts {
      std::string marked, key, dest;
    };
    auto o = std::make_shared<Opts>();
    c->add_option("--marked", o->marked, "CSV instance_id,choice")->required();
    c->add_option("--key", o->key, "answer key CSV")->required();
    c->add_option("--out", o->dest, "tally CSV")->required();
    c->callback([&out, o] {
      auto m = open_input(o->marked);
      auto k = open_input(o->key);
      const auto t = tally_preferences(m, k);
      write_file(o->dest, [&](std::ostream& os) { write_tally_csv(os, t); });
      write_tally_csv(out, t);
    });
  }
  {
    auto* c = cmd->add_subcommand("stats", "click and title-length statistics of a dataset");
    auto data = std::make_shared<std::vector<std::string>>();
    auto dest = std::make_shared<std::string>();
    c->add_option("--data", *data, "dataset JSON Lines (one or more)")->required();
    c->add_option("--out", *dest, "text summary (default: stdout)");
    c->callback([&out, data, dest] {
      std::vector<PairExample> all;
      for (const auto& p : *data) {
        auto part = load_dataset(p);
        all.insert(all.end(), part.begin(), part.end());
      }
      const auto stats = corpus_stats(all);
      if (dest->empty()) {
        write_corpus_stats(out, stats);
      } else {
        write_file(*dest, [&](std::ostream& os) { write_corpus_stats(os, stats); });
      }
    });
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Highlight the title tokens that explain why two articles are related."};
  app.name("hilite");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file; flags override it");

  Globals g;
  app.add_option("--seed", g.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->capture_default_str();

  add_synth(app, g, out);
  add_ingest(app, g, out);
  add_build(app, g, out);
  add_train(app, g, out);
  add_explain(app, g, out);
  add_eval(app, out);
  add_report(app, g, out);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "hilite: " << e.what() << "\n" << "run 'hilite --help' for usage\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "hilite: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace hilite::cli

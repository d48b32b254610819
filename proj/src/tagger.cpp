#include "hilite/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "hilite/common.hpp"
#include "hilite/eval.hpp"

namespace hilite {

// ---------------------------------------------------------------------------
// Input construction
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> subwords_of(std::span<const WordToken> words, const SubwordVocab& vocab) {
  std::vector<std::string> out;
  for (const auto& w : words) {
    for (auto& p : subword_tokenize(to_lower(w.text), vocab)) out.push_back(std::move(p));
  }
  return out;
}

std::set<std::size_t> gold_positions(const PairExample& ex) {
  std::set<std::string> gold(ex.gold_tokens.begin(), ex.gold_tokens.end());
  std::set<std::size_t> pos;
  for (std::size_t i = 0; i < ex.similar_title_tokens.size(); ++i) {
    if (gold.count(to_lower(ex.similar_title_tokens[i].text))) pos.insert(i);
  }
  return pos;
}

}  // namespace

TaggedInput build_tagged_input(const PairExample& ex, const SubwordVocab& vocab,
                               std::size_t max_len) {
  TaggedInput in;
  const auto similar_words = lower_texts(ex.similar_title_tokens);
  in.similar = align_subwords(similar_words, vocab);
  const std::size_t sim_len = in.similar.subwords.size();
  if (sim_len + 2 >= max_len + 1) {
    throw Error("similar title of pair " + ex.seed_id + "/" + ex.similar_id + " needs " +
                std::to_string(sim_len + 2) + " positions, max_len is " + std::to_string(max_len));
  }

  auto seed_title = subwords_of(ex.seed_title_tokens, vocab);
  auto seed_abstract = subwords_of(ex.seed_abstract_tokens, vocab);
  std::size_t budget = max_len - 2 - sim_len;
  if (seed_title.size() > budget) seed_title.resize(budget);
  budget -= seed_title.size();
  if (seed_abstract.size() > budget) {
    in.abstract_truncated = seed_abstract.size() - budget;
    seed_abstract.resize(budget);
  }

  in.tokens.push_back(std::string(SubwordVocab::kStart));
  in.tokens.insert(in.tokens.end(), seed_title.begin(), seed_title.end());
  in.tokens.insert(in.tokens.end(), seed_abstract.begin(), seed_abstract.end());
  in.tokens.push_back(std::string(SubwordVocab::kSep));
  in.segment_ids.assign(in.tokens.size(), 0);
  in.labels.assign(in.tokens.size(), 0);

  in.similar_begin = in.tokens.size();
  const auto sim_labels = expand_labels(in.similar, gold_positions(ex));
  in.tokens.insert(in.tokens.end(), in.similar.subwords.begin(), in.similar.subwords.end());
  in.segment_ids.resize(in.tokens.size(), 1);
  in.labels.insert(in.labels.end(), sim_labels.begin(), sim_labels.end());
  return in;
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

std::vector<std::string> feature_names(FeatureSet set) {
  if (set == FeatureSet::kMerged) {
    return {"in_seed_anywhere", "idf",       "max_cos_seed_title", "sum_cos_seed_title",
            "rel_position",     "token_len", "is_stopword",        "bias"};
  }
  return {"in_seed_title", "in_seed_abstract", "idf",         "max_cos_seed_title",
          "sum_cos_seed_title", "rel_position", "token_len", "is_stopword", "bias"};
}

std::string_view feature_set_name(FeatureSet set) {
  return set == FeatureSet::kMerged ? "merged" : "split";
}

std::optional<FeatureSet> parse_feature_set(std::string_view name) {
  if (name == "split") return FeatureSet::kSplit;
  if (name == "merged") return FeatureSet::kMerged;
  return std::nullopt;
}

std::vector<double> word_features(const PairExample& ex, const FeatureResources& res,
                                  FeatureSet set) {
  if (!res.idf || !res.stopwords) throw Error("tagger features need an IDF table and stopwords");
  const auto seed_title = lower_texts(ex.seed_title_tokens);
  const auto seed_abstract = lower_texts(ex.seed_abstract_tokens);
  const std::unordered_set<std::string> in_title(seed_title.begin(), seed_title.end());
  const std::unordered_set<std::string> in_abstract(seed_abstract.begin(), seed_abstract.end());
  const auto words = lower_texts(ex.similar_title_tokens);
  const std::size_t n = words.size();

  std::vector<double> out;
  out.reserve(n * feature_names(set).size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = words[i];
    double max_cos = 0.0, sum_cos = 0.0;
    if (res.embeddings) {
      bool any = false;
      for (const auto& s : seed_title) {
        if (auto c = res.embeddings->cosine(w, s)) {
          max_cos = any ? std::max(max_cos, *c) : *c;
          sum_cos += *c;
          any = true;
        }
      }
    }
    const double t = in_title.count(w) ? 1.0 : 0.0;
    const double a = in_abstract.count(w) ? 1.0 : 0.0;
    if (set == FeatureSet::kMerged) {
      out.push_back(std::max(t, a));
    } else {
      out.push_back(t);
      out.push_back(a);
    }
    out.push_back(res.idf->idf(w));
    out.push_back(max_cos);
    out.push_back(sum_cos);
    out.push_back(n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    out.push_back(static_cast<double>(w.size()) / 10.0);
    out.push_back(res.stopwords->count(w) ? 1.0 : 0.0);
    out.push_back(1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

std::size_t TaggerConfig::effective_warmup() const {
  if (warmup_steps > 0) return warmup_steps;
  return std::max<std::size_t>(100, total_steps / 10);
}

double learning_rate(std::size_t step, const TaggerConfig& config) {
  const double peak = config.peak_lr();
  const std::size_t warmup = config.effective_warmup();
  if (step <= warmup) {
    return peak * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (step >= config.total_steps || config.total_steps <= warmup) return 0.0;
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(config.total_steps - warmup);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

TaggerInstance make_instance(const PairExample& ex, const SubwordVocab& vocab,
                             const FeatureResources& res, const TaggerConfig& config) {
  const auto tagged = build_tagged_input(ex, vocab, config.max_len);
  const auto words = word_features(ex, res, config.features);
  const std::size_t dim = feature_names(config.features).size();

  TaggerInstance inst;
  inst.alignment = tagged.similar;
  inst.rows = tagged.similar.subwords.size();
  inst.labels.assign(tagged.labels.begin() + static_cast<std::ptrdiff_t>(tagged.similar_begin),
                     tagged.labels.end());
  inst.features.reserve(inst.rows * dim);
  for (std::size_t r = 0; r < inst.rows; ++r) {
    const std::size_t w = tagged.similar.word_of_subword[r];
    inst.features.insert(inst.features.end(), words.begin() + static_cast<std::ptrdiff_t>(w * dim),
                         words.begin() + static_cast<std::ptrdiff_t>((w + 1) * dim));
  }
  return inst;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z), stable for large |z|.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double dot(std::span<const double> w, const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
  return s;
}

}  // namespace

std::vector<double> forward(std::span<const double> weights, std::span<const double> features,
                            std::size_t rows) {
  const std::size_t dim = weights.size();
  if (features.size() != rows * dim) throw Error("feature matrix does not match weight dimension");
  std::vector<double> p(rows);
  for (std::size_t r = 0; r < rows; ++r) p[r] = sigmoid(dot(weights, features.data() + r * dim));
  return p;
}

LossAndGrad loss_and_grad(std::span<const double> weights,
                          std::span<const TaggerInstance* const> batch, unsigned threads) {
  const std::size_t dim = weights.size();
  struct Partial {
    double loss = 0.0;
    std::vector<double> grad;
    std::size_t tokens = 0;
  };
  std::vector<Partial> parts(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    const auto& inst = *batch[b];
    auto& part = parts[b];
    part.grad.assign(dim, 0.0);
    for (std::size_t r = 0; r < inst.rows; ++r) {
      const double* x = inst.features.data() + r * dim;
      const double z = dot(weights, x);
      const double y = static_cast<double>(inst.labels[r]);
      part.loss += softplus(z) - y * z;
      const double d = sigmoid(z) - y;
      for (std::size_t j = 0; j < dim; ++j) part.grad[j] += d * x[j];
    }
    part.tokens = inst.rows;
  });

  LossAndGrad out;
  out.grad.assign(dim, 0.0);
  for (const auto& part : parts) {
    out.loss += part.loss;
    for (std::size_t j = 0; j < dim; ++j) out.grad[j] += part.grad[j];
    out.tokens += part.tokens;
  }
  if (out.tokens > 0) {
    const double inv = 1.0 / static_cast<double>(out.tokens);
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
  }
  return out;
}

// ---------------------------------------------------------------------------

TaggerModel::TaggerModel(TaggerParams params, SubwordVocab vocab, FeatureResources res)
    : params_(std::move(params)), vocab_(std::move(vocab)), res_(res) {
  if (params_.weights.size() != feature_names(params_.config.features).size()) {
    throw Error("checkpoint weight count does not match its feature set");
  }
}

std::vector<double> TaggerModel::probabilities(const PairExample& ex) const {
  const auto inst = make_instance(ex, vocab_, res_, params_.config);
  return forward(params_.weights, inst.features, inst.rows);
}

std::set<std::size_t> TaggerModel::predict_words(const PairExample& ex, double threshold) const {
  const auto inst = make_instance(ex, vocab_, res_, params_.config);
  const auto p = forward(params_.weights, inst.features, inst.rows);
  std::vector<int> labels(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) labels[i] = p[i] >= threshold ? 1 : 0;
  return project_labels(inst.alignment, labels);
}

namespace {

struct DevItem {
  TaggerInstance inst;
  std::vector<std::string> words;
  std::set<std::string> gold;
};

double dev_token_f1(std::span<const double> weights, const std::vector<DevItem>& dev,
                    double threshold, unsigned threads) {
  std::vector<std::optional<InstanceScore>> scores(dev.size());
  parallel_for(dev.size(), threads, [&](std::size_t i) {
    const auto& d = dev[i];
    const auto p = forward(weights, d.inst.features, d.inst.rows);
    std::vector<int> labels(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) labels[k] = p[k] >= threshold ? 1 : 0;
    std::set<std::string> pred;
    for (std::size_t w : project_labels(d.inst.alignment, labels)) pred.insert(d.words[w]);
    scores[i] = token_metrics(d.gold, pred);
  });
  std::vector<InstanceScore> kept;
  for (auto& s : scores) {
    if (s) kept.push_back(*s);
  }
  return kept.empty() ? 0.0 : aggregate(kept).f1;
}

}  // namespace

TrainResult train_tagger(std::span<const PairExample> train_set,
                         std::span<const PairExample> dev_set, const SubwordVocab& vocab,
                         const FeatureResources& res, const TaggerConfig& config) {
  if (train_set.empty() || dev_set.empty()) throw Error("tagger training needs non-empty train and dev sets");
  if (config.total_steps == 0 || config.batch_size == 0) throw Error("total_steps and batch_size must be positive");

  TrainResult result;
  std::vector<TaggerInstance> train;
  train.reserve(train_set.size());
  for (const auto& ex : train_set) {
    try {
      train.push_back(make_instance(ex, vocab, res, config));
    } catch (const Error&) {
      ++result.skipped_train;
    }
  }
  if (train.empty()) throw Error("no usable training instances");

  std::vector<DevItem> dev;
  for (const auto& ex : dev_set) {
    try {
      dev.push_back({make_instance(ex, vocab, res, config), lower_texts(ex.similar_title_tokens),
                     {ex.gold_tokens.begin(), ex.gold_tokens.end()}});
    } catch (const Error&) {
    }
  }
  if (dev.empty()) throw Error("no usable dev instances");

  const std::size_t dim = feature_names(config.features).size();
  std::vector<double> w(dim, 0.0), m(dim, 0.0), v(dim, 0.0);

  Rng rng(derive_seed(config.seed, "tagger-batches"));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  result.best.feature_names = feature_names(config.features);
  result.best.config = config;
  result.best.weights = w;
  result.best_dev_f1 = -1.0;

  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  std::vector<const TaggerInstance*> batch;
  for (std::size_t step = 1; step <= config.total_steps; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&train[order[cursor++]]);
    }
    const auto lg = loss_and_grad(w, batch, config.threads);
    if (!std::isfinite(lg.loss)) {
      throw Error("training diverged at step " + std::to_string(step) + " (loss is not finite)");
    }
    loss_sum += lg.loss;
    ++loss_n;

    const double lr = learning_rate(step, config);
    const double t = static_cast<double>(step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t j = 0; j < dim; ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * lg.grad[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * lg.grad[j] * lg.grad[j];
      w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.epsilon);
    }

    const bool eval_now =
        (config.eval_every > 0 && step % config.eval_every == 0) || step == config.total_steps;
    if (!eval_now) continue;
    const double f1 = dev_token_f1(w, dev, config.decision_threshold, config.threads);
    result.log.push_back({step, lr, loss_sum / static_cast<double>(loss_n), f1});
    loss_sum = 0.0;
    loss_n = 0;
    if (f1 > result.best_dev_f1) {
      result.best_dev_f1 = f1;
      result.best.weights = w;
      result.best.step = step;
    }
  }
  return result;
}

SubwordVocab build_tagger_vocab(std::span<const PairExample> examples, std::size_t max_size) {
  std::vector<std::string> words;
  for (const auto& ex : examples) {
    for (const auto* list : {&ex.seed_title_tokens, &ex.seed_abstract_tokens, &ex.similar_title_tokens}) {
      for (const auto& t : *list) words.push_back(to_lower(t.text));
    }
  }
  SubwordVocabOptions opts;
  opts.max_size = max_size;
  // Never fail on a small budget: grow to the mandatory size instead.
  try {
    return build_subword_vocab(words, opts);
  } catch (const Error&) {
    std::set<std::string> chars;
    for (const auto& w : words) {
      for (char c : w) chars.insert(std::string(1, c));
    }
    opts.max_size = 2 + 2 * chars.size();
    return build_subword_vocab(words, opts);
  }
}

// ---------------------------------------------------------------------------

void save_checkpoint(std::ostream& out, const TaggerParams& params, const std::string& vocab_file) {
  const auto& c = params.config;
  nlohmann::ordered_json j;
  j["format"] = "hilite-tagger";
  j["version"] = 1;
  j["feature_set"] = feature_set_name(c.features);
  j["feature_names"] = params.feature_names;
  j["weights"] = params.weights;
  j["step"] = params.step;
  j["config"] = {{"lr", c.peak_lr()},
                 {"lr_scale", c.lr_scale},
                 {"beta1", c.beta1},
                 {"beta2", c.beta2},
                 {"epsilon", c.epsilon},
                 {"warmup_steps", c.effective_warmup()},
                 {"total_steps", c.total_steps},
                 {"batch_size", c.batch_size},
                 {"eval_every", c.eval_every},
                 {"max_len", c.max_len},
                 {"decision_threshold", c.decision_threshold},
                 {"seed", c.seed}};
  j["vocab_file"] = vocab_file;
  out << j.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  try {
    auto j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != "hilite-tagger" || j.at("version").get<int>() != 1) {
      throw Error("unsupported checkpoint format");
    }
    LoadedCheckpoint out;
    auto fs = parse_feature_set(j.at("feature_set").get<std::string>());
    if (!fs) throw Error("unknown feature set in checkpoint");
    auto& p = out.params;
    auto& c = p.config;
    c.features = *fs;
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.step = j.at("step").get<std::size_t>();
    const auto& cj = j.at("config");
    c.lr_scale = cj.at("lr_scale").get<double>();
    c.beta1 = cj.at("beta1").get<double>();
    c.beta2 = cj.at("beta2").get<double>();
    c.epsilon = cj.at("epsilon").get<double>();
    c.warmup_steps = cj.at("warmup_steps").get<std::size_t>();
    c.total_steps = cj.at("total_steps").get<std::size_t>();
    c.batch_size = cj.at("batch_size").get<std::size_t>();
    c.eval_every = cj.at("eval_every").get<std::size_t>();
    c.max_len = cj.at("max_len").get<std::size_t>();
    c.decision_threshold = cj.at("decision_threshold").get<double>();
    c.seed = cj.at("seed").get<std::uint64_t>();
    out.vocab_file = j.at("vocab_file").get<std::string>();
    if (p.feature_names != feature_names(c.features) || p.weights.size() != p.feature_names.size()) {
      throw Error("checkpoint features do not match the declared feature set");
    }
    for (double w : p.weights) {
      if (!std::isfinite(w)) throw Error("checkpoint contains a non-finite weight");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows) {
  out << "step,lr,train_loss,dev_F1\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_fixed(r.lr, 10) << ',' << format_fixed(r.train_loss, 6) << ','
        << format_fixed(r.dev_f1, 6) << '\n';
  }
}

}  // namespace hilite

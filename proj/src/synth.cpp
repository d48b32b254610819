#include "hilite/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

#include "hilite/common.hpp"

namespace hilite {

namespace {

/// Inverse-CDF sampler over ranks 0..n-1 with weight 1/(rank+1)^s.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s) : cdf_(n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += 1.0 / std::pow(static_cast<double>(i + 1), s);
      cdf_[i] = sum;
    }
    for (auto& c : cdf_) c /= sum;
  }
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }
  double weight(std::size_t i) const { return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1]; }

 private:
  std::vector<double> cdf_;
};

/// Pronounceable unique lowercase words.
class WordFactory {
 public:
  WordFactory(Rng& rng, const std::vector<std::string>& reserved)
      : rng_(rng), used_(reserved.begin(), reserved.end()) {}

  std::string make(int min_syllables, int max_syllables, double hyphen_number_p = 0.0) {
    static const char* kOnsets[] = {"b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                    "s", "t", "v", "z", "br", "cr", "pr", "st", "tr", "ph", "th"};
    static const char* kVowels[] = {"a", "e", "i", "o", "u", "ae", "io", "y"};
    static const char* kCodas[] = {"", "", "", "n", "s", "l", "r", "x", "m"};
    while (true) {
      std::string w;
      const int syl = rng_.range(min_syllables, max_syllables);
      for (int i = 0; i < syl; ++i) {
        w += kOnsets[rng_.index(std::size(kOnsets))];
        w += kVowels[rng_.index(std::size(kVowels))];
      }
      w += kCodas[rng_.index(std::size(kCodas))];
      if (hyphen_number_p > 0.0 && rng_.bernoulli(hyphen_number_p)) {
        w += "-" + std::to_string(rng_.range(1, 99));
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::unordered_set<std::string> used_;
};

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

std::vector<double> perturb(const std::vector<double>& base, double noise, Rng& rng) {
  auto v = base;
  const auto eps = random_unit(rng, base.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise * eps[i];
  return v;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

template <typename T>
std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t k, Rng& rng) {
  auto copy = pool;
  rng.shuffle(copy);
  copy.resize(std::min(k, copy.size()));
  return copy;
}

std::string make_id(char prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%07zu", prefix, n);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (title_len_min < 7) throw Error("title_len_min must be at least 7");
  if (title_len_max < title_len_min) throw Error("title_len_max must be >= title_len_min");
  if (!(zipf_exponent > 1.0)) throw Error("zipf_exponent must be > 1");
  if (n_articles == 0 || articles_per_cluster == 0) throw Error("corpus sizes must be positive");
  if (primary_topics == 0) throw Error("primary_topics must be positive");
  if (max_extra_topics > extra_topic_pool) throw Error("max_extra_topics exceeds extra_topic_pool");
  if (primary_topics + secondary_topics + max_extra_topics + 2 > title_len_min - 1) {
    throw Error("title_len_min is too small for the topic and field tokens");
  }
  if (n_fields == 0 || field_words_per_field == 0 || n_fillers == 0) {
    throw Error("vocabulary sizes must be positive");
  }
  if (max_clicks == 0) throw Error("max_clicks must be positive");
  for (double p : {full_primary_query_p, secondary_query_p, extra_query_p}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("query probabilities must lie in [0, 1]");
  }
  if (embedding_dim == 0) throw Error("embedding_dim must be positive");
}

const SynthArticle* SynthCorpus::find(const std::string& id) const {
  // Ids are "P" + zero-padded index.
  if (id.size() < 2 || id[0] != 'P') return nullptr;
  std::size_t idx = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return nullptr;
    idx = idx * 10 + static_cast<std::size_t>(id[i] - '0');
  }
  return idx < meta.size() && meta[idx].id == id ? &meta[idx] : nullptr;
}

SynthCorpus generate_corpus(const SynthConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, "corpus"));
  SynthCorpus corpus;
  for (const auto& w : default_stopwords()) corpus.stopwords.push_back(w);
  std::sort(corpus.stopwords.begin(), corpus.stopwords.end());

  WordFactory words(rng, corpus.stopwords);
  const std::size_t n_clusters =
      (config.n_articles + config.articles_per_cluster - 1) / config.articles_per_cluster;

  struct Cluster {
    std::vector<std::string> core, extra;
    std::size_t field = 0;
    std::vector<double> centroid;
  };
  std::vector<Cluster> clusters(n_clusters);
  std::vector<std::vector<std::string>> fields(config.n_fields);
  std::vector<std::vector<double>> field_centroids(config.n_fields);

  corpus.embeddings = EmbeddingTable(config.embedding_dim);
  auto& emb = corpus.embeddings;
  for (const auto& s : corpus.stopwords) emb.add(s, random_unit(rng, config.embedding_dim));

  for (std::size_t f = 0; f < config.n_fields; ++f) {
    field_centroids[f] = random_unit(rng, config.embedding_dim);
    for (std::size_t k = 0; k < config.field_words_per_field; ++k) {
      auto w = words.make(2, 3);
      emb.add(w, perturb(field_centroids[f], 0.8, rng));
      fields[f].push_back(std::move(w));
    }
  }
  for (auto& c : clusters) {
    c.field = rng.index(config.n_fields);
    c.centroid = random_unit(rng, config.embedding_dim);
    for (std::size_t k = 0; k < config.primary_topics + config.secondary_topics; ++k) {
      auto w = words.make(3, 4, 0.1);
      emb.add(w, perturb(c.centroid, 0.45, rng));
      c.core.push_back(std::move(w));
    }
    for (std::size_t k = 0; k < config.extra_topic_pool; ++k) {
      auto w = words.make(3, 4, 0.1);
      emb.add(w, perturb(c.centroid, 0.45, rng));
      c.extra.push_back(std::move(w));
    }
  }
  std::vector<std::string> fillers;
  for (std::size_t k = 0; k < config.n_fillers; ++k) {
    auto w = words.make(2, 4);
    emb.add(w, random_unit(rng, config.embedding_dim));
    fillers.push_back(std::move(w));
  }

  auto filler_or_stop = [&](double stop_p) -> std::string {
    if (rng.bernoulli(stop_p)) return corpus.stopwords[rng.index(corpus.stopwords.size())];
    return fillers[rng.index(fillers.size())];
  };

  corpus.clusters.assign(n_clusters, {});
  for (std::size_t i = 0; i < config.n_articles; ++i) {
    const std::size_t cid = i / config.articles_per_cluster;
    const auto& c = clusters[cid];
    SynthArticle a;
    a.id = make_id('P', i);
    a.cluster = cid;
    a.topics = c.core;
    a.n_primary = config.primary_topics;
    const auto n_extra = static_cast<std::size_t>(rng.range(0, static_cast<int>(config.max_extra_topics)));
    for (auto& e : sample_without_replacement(c.extra, n_extra, rng)) a.topics.push_back(e);

    // Title: topic tokens, 1-2 field words, then stopwords / fillers.
    const double drawn = config.title_len_mean + 4.0 * rng.normal();
    const auto len = static_cast<std::size_t>(std::clamp(
        std::lround(drawn), static_cast<long>(config.title_len_min), static_cast<long>(config.title_len_max)));
    std::vector<std::string> title = a.topics;
    for (auto& fw : sample_without_replacement(fields[c.field], static_cast<std::size_t>(rng.range(1, 2)), rng)) {
      title.push_back(fw);
    }
    while (title.size() + 1 < len) title.push_back(filler_or_stop(0.3));
    rng.shuffle(title);
    title[0] = capitalize(title[0]);

    // Abstract: the primary topics again, padded with filler text.
    std::vector<std::string> body;
    for (std::size_t k = 0; k < a.n_primary; ++k) {
      body.push_back(a.topics[k]);
      if (rng.bernoulli(0.5)) body.push_back(a.topics[k]);
    }
    while (body.size() < config.abstract_len) body.push_back(filler_or_stop(0.35));
    rng.shuffle(body);
    std::string abstract_text;
    for (std::size_t k = 0; k < body.size(); ++k) {
      const bool sentence_start = k % 12 == 0;
      if (k) abstract_text += sentence_start ? ". " : " ";
      abstract_text += sentence_start ? capitalize(body[k]) : body[k];
    }
    abstract_text += ".";

    corpus.articles[a.id] = Article{a.id, join(title) + ".", abstract_text};
    corpus.clusters[cid].push_back(i);
    corpus.meta.push_back(std::move(a));
  }
  return corpus;
}

std::vector<std::string> planted_gold(const SynthCorpus& corpus, const std::string& seed_id,
                                      const std::string& similar_id) {
  const auto* seed = corpus.find(seed_id);
  const auto* similar = corpus.find(similar_id);
  if (!seed || !similar) return {};
  std::set<std::string> shared;
  const auto sim_end = similar->topics.begin() + static_cast<std::ptrdiff_t>(similar->n_primary);
  for (std::size_t k = 0; k < seed->n_primary; ++k) {
    if (std::find(similar->topics.begin(), sim_end, seed->topics[k]) != sim_end) {
      shared.insert(seed->topics[k]);
    }
  }
  std::vector<std::string> out;
  for (const auto& tok : unique_lower_texts(word_tokenize(corpus.articles.at(similar_id).title))) {
    if (shared.count(tok)) out.push_back(tok);
  }
  return out;
}

std::vector<SessionEvent> generate_sessions(const SynthCorpus& corpus, const SynthConfig& config) {
  config.validate();
  if (corpus.meta.empty()) throw Error("cannot generate sessions for an empty corpus");
  Rng rng(derive_seed(config.seed, "sessions"));
  const ZipfSampler cluster_pick(corpus.clusters.size(), config.zipf_exponent);
  const ZipfSampler member_pick(config.articles_per_cluster, config.zipf_exponent);

  std::vector<SessionEvent> events;
  events.reserve(config.sessions * 2);
  for (std::size_t s = 0; s < config.sessions; ++s) {
    const auto& members = corpus.clusters[cluster_pick.sample(rng)];
    std::size_t pick = member_pick.sample(rng);
    while (pick >= members.size()) pick = member_pick.sample(rng);
    const auto& target = corpus.meta[members[pick]];

    std::vector<std::string> query_tokens;
    const std::vector<std::string> primary(target.topics.begin(),
                                           target.topics.begin() + static_cast<std::ptrdiff_t>(target.n_primary));
    if (rng.bernoulli(config.full_primary_query_p)) {
      query_tokens = primary;
    } else {
      query_tokens.push_back(primary[rng.index(primary.size())]);
    }
    for (std::size_t k = target.n_primary; k < target.topics.size(); ++k) {
      const bool secondary = k < target.n_primary + config.secondary_topics;
      if (rng.bernoulli(secondary ? config.secondary_query_p : config.extra_query_p)) {
        query_tokens.push_back(target.topics[k]);
      }
    }
    rng.shuffle(query_tokens);

    // Results: every cluster member containing all query tokens, plus a few
    // unrelated articles that are never clicked.
    std::vector<std::size_t> matches;
    for (std::size_t m : members) {
      const auto& topics = corpus.meta[m].topics;
      bool all = std::all_of(query_tokens.begin(), query_tokens.end(), [&](const std::string& q) {
        return std::find(topics.begin(), topics.end(), q) != topics.end();
      });
      if (all) matches.push_back(m);
    }
    std::vector<std::size_t> page = matches;
    const int distractors = rng.range(0, 3);
    for (int d = 0; d < distractors; ++d) page.push_back(rng.index(corpus.meta.size()));
    rng.shuffle(page);

    const auto n_clicks =
        std::min<std::size_t>(static_cast<std::size_t>(rng.range(1, static_cast<int>(config.max_clicks))),
                              matches.size());
    std::set<std::size_t> clicked{members[pick]};
    std::vector<std::size_t> others;
    for (std::size_t m : matches) {
      if (m != members[pick]) others.push_back(m);
    }
    while (clicked.size() < n_clicks && !others.empty()) {
      double total = 0.0;
      for (std::size_t m : others) total += member_pick.weight(m % config.articles_per_cluster);
      double r = rng.uniform() * total;
      std::size_t chosen = others.size() - 1;
      for (std::size_t k = 0; k < others.size(); ++k) {
        r -= member_pick.weight(others[k] % config.articles_per_cluster);
        if (r < 0) {
          chosen = k;
          break;
        }
      }
      clicked.insert(others[chosen]);
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(chosen));
    }

    std::string query = join(query_tokens);
    if (rng.bernoulli(0.1)) query = capitalize(query);
    const std::string session_id = make_id('S', s);
    const std::int64_t t0 = 1'600'000'000'000LL + static_cast<std::int64_t>(s) * 60'000;
    std::int64_t offset = 0;
    std::set<std::size_t> emitted;
    for (std::size_t rank = 0; rank < page.size(); ++rank) {
      const std::size_t art = page[rank];
      if (!clicked.count(art) || emitted.count(art)) continue;
      emitted.insert(art);
      offset += 15'000;
      events.push_back({session_id, t0 + offset, query, static_cast<int>(rank + 1), corpus.meta[art].id});
    }
  }
  return events;
}

void write_topic_map(std::ostream& out, const SynthCorpus& corpus) {
  for (const auto& a : corpus.meta) {
    out << a.id << '\t' << a.cluster << '\t';
    for (std::size_t i = 0; i < a.topics.size(); ++i) out << (i ? "," : "") << a.topics[i];
    out << '\n';
  }
}

std::vector<PairExample> generate_segment_examples(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "segment-examples"));
  WordFactory words(rng, {});
  std::vector<std::string> vocab;
  for (int i = 0; i < 4000; ++i) vocab.push_back(words.make(2, 4));
  auto draw = [&](std::size_t k, std::set<std::string>& taken) {
    std::vector<std::string> out;
    while (out.size() < k) {
      const auto& w = vocab[rng.index(vocab.size())];
      if (taken.insert(w).second) out.push_back(w);
    }
    return out;
  };

  std::vector<PairExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> taken;
    const auto title_only = draw(static_cast<std::size_t>(rng.range(2, 4)), taken);
    const auto both = draw(static_cast<std::size_t>(rng.range(2, 3)), taken);
    const auto abstract_only = draw(static_cast<std::size_t>(rng.range(4, 6)), taken);
    const auto seed_fill = draw(static_cast<std::size_t>(rng.range(3, 6)), taken);
    const auto abstract_fill = draw(30, taken);
    const auto similar_fill = draw(static_cast<std::size_t>(rng.range(3, 6)), taken);

    std::vector<std::string> seed_title = title_only;
    seed_title.insert(seed_title.end(), both.begin(), both.end());
    seed_title.insert(seed_title.end(), seed_fill.begin(), seed_fill.end());
    rng.shuffle(seed_title);

    std::vector<std::string> abstract_words = both;
    abstract_words.insert(abstract_words.end(), abstract_only.begin(), abstract_only.end());
    abstract_words.insert(abstract_words.end(), abstract_fill.begin(), abstract_fill.end());
    rng.shuffle(abstract_words);

    std::vector<std::string> similar =
        sample_without_replacement(title_only, static_cast<std::size_t>(rng.range(1, static_cast<int>(title_only.size()))), rng);
    for (auto& w : sample_without_replacement(both, static_cast<std::size_t>(rng.range(1, 2)), rng)) similar.push_back(w);
    for (auto& w : sample_without_replacement(abstract_only, static_cast<std::size_t>(rng.range(1, 2)), rng)) similar.push_back(w);
    similar.insert(similar.end(), similar_fill.begin(), similar_fill.end());
    rng.shuffle(similar);

    auto ex = make_example_texts(make_id('T', i), make_id('U', i), capitalize(join(seed_title)) + ".",
                                 capitalize(join(abstract_words)) + ".",
                                 capitalize(join(similar)) + ".");
    const std::set<std::string> in_title(title_only.begin(), title_only.end());
    ex.token_counts.tokens = unique_lower_texts(ex.similar_title_tokens);
    ex.token_counts.counts.assign(ex.token_counts.tokens.size(), 0);
    for (std::size_t k = 0; k < ex.token_counts.tokens.size(); ++k) {
      if (in_title.count(ex.token_counts.tokens[k])) {
        ex.gold_tokens.push_back(ex.token_counts.tokens[k]);
        ex.token_counts.counts[k] = rng.range(5, 50);
      }
    }
    ex.token_counts.total = 0;
    for (auto c : ex.token_counts.counts) ex.token_counts.total += c;
    ex.combined_clicks = ex.token_counts.total;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace hilite

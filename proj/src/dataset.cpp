#include "hilite/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "hilite/common.hpp"

namespace hilite {

std::int64_t TokenClickCounts::count(std::string_view token) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == token) return counts[i];
  }
  return 0;
}

std::size_t TokenClickCounts::nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::int64_t c) { return c > 0; }));
}

TokenClickCounts count_title_token_clicks(const PairAggregate& agg,
                                          std::span<const WordToken> similar_title) {
  TokenClickCounts out;
  out.tokens = unique_lower_texts(similar_title);
  out.counts.assign(out.tokens.size(), 0);
  for (const auto& [query, clicks] : agg.query_counts) {
    const auto qtokens = word_tokenize(query);
    std::unordered_set<std::string> qset;
    for (const auto& t : qtokens) qset.insert(to_lower(t.text));
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
      if (qset.count(out.tokens[i])) out.counts[i] += clicks;
    }
  }
  out.total = std::accumulate(out.counts.begin(), out.counts.end(), std::int64_t{0});
  return out;
}

std::vector<double> scaled_softmax(std::span<const double> values) {
  std::vector<double> out(values.size());
  if (values.empty()) return out;
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  std::vector<double> z(values.size(), 0.0);
  if (scale > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) z[i] = values[i] / scale;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - zmax);
    sum += out[i];
  }
  for (auto& o : out) o /= sum;
  return out;
}

std::vector<std::size_t> softmax_threshold_select(std::span<const double> scores,
                                                  std::span<const double> secondary,
                                                  const ThresholdConfig& config) {
  const auto probs = scaled_softmax(scores);
  std::vector<std::size_t> passing;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    // Tolerance so that e.g. a uniform 1/n passes a threshold of exactly 1/n.
    if (probs[i] + 1e-12 >= config.threshold) passing.push_back(i);
  }
  const auto cap = static_cast<std::size_t>(
      std::floor(config.cap_fraction * static_cast<double>(scores.size()) + 1e-9));
  if (passing.size() > cap) {
    auto sec = [&](std::size_t i) { return secondary.empty() ? 0.0 : secondary[i]; };
    std::stable_sort(passing.begin(), passing.end(), [&](std::size_t a, std::size_t b) {
      if (probs[a] != probs[b]) return probs[a] > probs[b];
      if (sec(a) != sec(b)) return sec(a) > sec(b);
      return a < b;
    });
    passing.resize(cap);
    std::sort(passing.begin(), passing.end());
  }
  return passing;
}

std::vector<std::string> select_gold_tokens(const TokenClickCounts& counts,
                                            const ThresholdConfig& config) {
  if (counts.total <= 0) throw Error("cannot label a pair whose title tokens have no clicks");
  std::vector<double> values(counts.counts.begin(), counts.counts.end());
  std::vector<std::string> gold;
  for (std::size_t i : softmax_threshold_select(values, values, config)) {
    gold.push_back(counts.tokens[i]);
  }
  return gold;
}

std::string_view drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "kept";
    case DropReason::kMinClicks: return "min_clicks";
    case DropReason::kMinTitleLen: return "min_title_len";
    case DropReason::kMinNonzero: return "min_nonzero";
    case DropReason::kMissingMetadata: return "missing_metadata";
    case DropReason::kNoGold: return "no_gold";
  }
  return "unknown";
}

DropReason filter_pair(std::int64_t combined_clicks, std::size_t similar_title_len,
                       std::size_t nonzero_tokens, const FilterConfig& config) {
  if (combined_clicks < config.min_clicks) return DropReason::kMinClicks;
  if (similar_title_len < config.min_title_len) return DropReason::kMinTitleLen;
  if (nonzero_tokens < config.min_nonzero) return DropReason::kMinNonzero;
  return DropReason::kNone;
}

PairExample make_example_texts(std::string seed_id, std::string similar_id,
                               std::string seed_title, std::string seed_abstract,
                               std::string similar_title) {
  PairExample ex;
  ex.seed_id = std::move(seed_id);
  ex.similar_id = std::move(similar_id);
  ex.seed_title = std::move(seed_title);
  ex.seed_abstract = std::move(seed_abstract);
  ex.similar_title = std::move(similar_title);
  ex.seed_title_tokens = word_tokenize(ex.seed_title);
  ex.seed_abstract_tokens = word_tokenize(ex.seed_abstract);
  ex.similar_title_tokens = word_tokenize(ex.similar_title);
  return ex;
}

LabelOutcome label_pair(const PairAggregate& agg, const ArticleTable& articles,
                        const BuildConfig& config) {
  auto seed = articles.find(agg.seed_id);
  auto similar = articles.find(agg.similar_id);
  if (seed == articles.end() || similar == articles.end()) {
    return {std::nullopt, DropReason::kMissingMetadata};
  }
  auto ex = make_example_texts(agg.seed_id, agg.similar_id, seed->second.title,
                               seed->second.abstract_text, similar->second.title);
  ex.combined_clicks = agg.combined_clicks;
  ex.token_counts = count_title_token_clicks(agg, ex.similar_title_tokens);

  auto reason = filter_pair(ex.combined_clicks, ex.similar_title_tokens.size(),
                            ex.token_counts.nonzero(), config.filter);
  if (reason != DropReason::kNone) return {std::nullopt, reason};

  ex.gold_tokens = select_gold_tokens(ex.token_counts, config.labeling);
  if (ex.gold_tokens.empty()) return {std::nullopt, DropReason::kNoGold};
  return {std::move(ex), DropReason::kNone};
}

BuildResult build_examples(const AggregateMap& aggs, const ArticleTable& articles,
                           const BuildConfig& config) {
  std::vector<const PairAggregate*> order;
  order.reserve(aggs.size());
  for (const auto& [key, agg] : aggs) order.push_back(&agg);

  std::vector<LabelOutcome> outcomes(order.size());
  parallel_for(order.size(), config.threads, [&](std::size_t i) {
    outcomes[i] = label_pair(*order[i], articles, config);
  });

  BuildResult result;
  for (auto& o : outcomes) {
    if (o.example) {
      result.examples.push_back(std::move(*o.example));
    } else {
      ++result.dropped[o.reason];
    }
  }
  // AggregateMap iteration is already (seed_id, similar_id) order.
  return result;
}

DatasetSplits split_dataset(std::span<const PairExample> examples,
                            std::array<double, 3> ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw Error("split ratios must be non-negative and sum to 1");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) groups[examples[i].seed_id].push_back(i);

  std::vector<const std::vector<std::size_t>*> order;
  for (const auto& [id, members] : groups) order.push_back(&members);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  const double n = static_cast<double>(examples.size());
  std::array<double, 3> deficit{ratios[0] * n, ratios[1] * n, ratios[2] * n};
  std::array<std::vector<std::size_t>, 3> assigned;
  for (const auto* members : order) {
    std::size_t target = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (deficit[s] > deficit[target]) target = s;
    }
    deficit[target] -= static_cast<double>(members->size());
    assigned[target].insert(assigned[target].end(), members->begin(), members->end());
  }

  auto collect = [&](std::vector<std::size_t>& idx) {
    std::sort(idx.begin(), idx.end());  // input order is (seed_id, similar_id)
    std::vector<PairExample> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(examples[i]);
    std::stable_sort(out.begin(), out.end(), [](const PairExample& a, const PairExample& b) {
      return std::tie(a.seed_id, a.similar_id) < std::tie(b.seed_id, b.similar_id);
    });
    return out;
  };
  return {collect(assigned[0]), collect(assigned[1]), collect(assigned[2])};
}

// ---------------------------------------------------------------------------

IdfTable::IdfTable(std::size_t doc_count, std::unordered_map<std::string, std::size_t> doc_freq,
                   std::size_t total_length)
    : doc_count_(doc_count), doc_freq_(std::move(doc_freq)), total_length_(total_length) {}

std::size_t IdfTable::doc_freq(std::string_view token) const {
  auto it = doc_freq_.find(std::string(token));
  return it == doc_freq_.end() ? 0 : it->second;
}

double IdfTable::idf(std::string_view token) const {
  const double n = static_cast<double>(doc_count_);
  const double df = static_cast<double>(doc_freq(token));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double IdfTable::avg_doc_len() const {
  return doc_count_ == 0 ? 0.0
                         : static_cast<double>(total_length_) / static_cast<double>(doc_count_);
}

IdfTable compute_idf(std::span<const std::vector<std::string>> documents) {
  if (documents.empty()) throw Error("IDF needs at least one document");
  std::unordered_map<std::string, std::size_t> df;
  std::size_t total = 0;
  for (const auto& doc : documents) {
    total += doc.size();
    std::unordered_set<std::string_view> seen;
    for (const auto& t : doc) {
      if (seen.insert(t).second) ++df[t];
    }
  }
  return IdfTable(documents.size(), std::move(df), total);
}

IdfTable idf_from_titles(const ArticleTable& articles) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(articles.size());
  for (const auto& [id, a] : articles) docs.push_back(lower_texts(word_tokenize(a.title)));
  return compute_idf(docs);
}

// ---------------------------------------------------------------------------

void write_dataset_jsonl(std::ostream& out, std::span<const PairExample> examples) {
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["seed_id"] = ex.seed_id;
    j["similar_id"] = ex.similar_id;
    j["seed_title"] = ex.seed_title;
    j["seed_abstract"] = ex.seed_abstract;
    j["similar_title"] = ex.similar_title;
    j["token_counts"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < ex.token_counts.tokens.size(); ++i) {
      j["token_counts"][ex.token_counts.tokens[i]] = ex.token_counts.counts[i];
    }
    j["combined_clicks"] = ex.combined_clicks;
    j["gold_tokens"] = ex.gold_tokens;
    out << j.dump() << '\n';
  }
}

std::vector<PairExample> read_dataset_jsonl(std::istream& in) {
  std::vector<PairExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fail = [&](const std::string& what) {
      throw Error("dataset line " + std::to_string(lineno) + ": " + what);
    };
    try {
      auto j = nlohmann::json::parse(line);
      auto ex = make_example_texts(j.at("seed_id").get<std::string>(),
                                   j.at("similar_id").get<std::string>(),
                                   j.at("seed_title").get<std::string>(),
                                   j.value("seed_abstract", std::string()),
                                   j.at("similar_title").get<std::string>());
      ex.combined_clicks = j.at("combined_clicks").get<std::int64_t>();
      ex.token_counts.tokens = unique_lower_texts(ex.similar_title_tokens);
      ex.token_counts.counts.assign(ex.token_counts.tokens.size(), 0);
      std::set<std::string> title_set(ex.token_counts.tokens.begin(), ex.token_counts.tokens.end());
      if (j.contains("token_counts")) {
        for (auto& [tok, n] : j.at("token_counts").items()) {
          if (!title_set.count(tok)) fail("token_counts key not in similar title: " + tok);
          for (std::size_t i = 0; i < ex.token_counts.tokens.size(); ++i) {
            if (ex.token_counts.tokens[i] == tok) ex.token_counts.counts[i] = n.get<std::int64_t>();
          }
        }
      }
      ex.token_counts.total = std::accumulate(ex.token_counts.counts.begin(),
                                              ex.token_counts.counts.end(), std::int64_t{0});
      std::set<std::string> gold;
      for (auto& g : j.at("gold_tokens")) {
        auto tok = to_lower(g.get<std::string>());
        if (!title_set.count(tok)) fail("gold token not in similar title: " + tok);
        gold.insert(tok);
      }
      for (const auto& t : ex.token_counts.tokens) {
        if (gold.count(t)) ex.gold_tokens.push_back(t);
      }
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
  }
  return out;
}

std::vector<PairExample> read_dataset_file(const std::string& path) {
  auto in = open_input(path);
  return read_dataset_jsonl(in);
}

}  // namespace hilite

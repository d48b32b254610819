#include "hilite/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "hilite/common.hpp"

namespace hilite {

namespace {

template <typename T>
std::size_t intersection_size(const std::set<T>& a, const std::set<T>& b) {
  std::size_t n = 0;
  for (const auto& x : a) n += b.count(x);
  return n;
}

template <typename T>
std::optional<InstanceScore> set_metrics(const std::set<T>& gold, const std::set<T>& pred) {
  InstanceScore s;
  s.gold_size = gold.size();
  s.pred_size = pred.size();
  if (gold.empty()) {
    if (!pred.empty()) return std::nullopt;
    s.recall = s.precision = 1.0;
    return s;
  }
  s.hits = intersection_size(gold, pred);
  s.recall = static_cast<double>(s.hits) / static_cast<double>(gold.size());
  s.precision = pred.empty() ? 0.0 : static_cast<double>(s.hits) / static_cast<double>(pred.size());
  return s;
}

}  // namespace

std::optional<InstanceScore> token_metrics(const std::set<std::string>& gold,
                                           const std::set<std::string>& pred) {
  return set_metrics(gold, pred);
}

std::optional<InstanceScore> title_metrics(std::span<const WordToken> title,
                                           const std::set<std::string>& gold,
                                           const std::set<std::string>& pred) {
  std::set<std::size_t> gold_pos, pred_pos;
  for (std::size_t i = 0; i < title.size(); ++i) {
    const auto tok = to_lower(title[i].text);
    if (gold.count(tok)) gold_pos.insert(i);
    if (pred.count(tok)) pred_pos.insert(i);
  }
  return set_metrics(gold_pos, pred_pos);
}

double f1_score(double recall, double precision) {
  const double sum = recall + precision;
  return sum == 0.0 ? 0.0 : 2.0 * recall * precision / sum;
}

EvalMetrics aggregate(std::span<const InstanceScore> scores) {
  if (scores.empty()) throw Error("cannot aggregate an empty score list");
  // Sum in a fixed order of values so the mean does not depend on the input
  // order.
  std::vector<double> r, p, len;
  for (const auto& s : scores) {
    r.push_back(s.recall);
    p.push_back(s.precision);
    len.push_back(static_cast<double>(s.pred_size));
  }
  auto mean = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  EvalMetrics m;
  m.recall = mean(r);
  m.precision = mean(p);
  m.f1 = f1_score(m.recall, m.precision);
  m.avg_pred_len = mean(len);
  m.n_instances = scores.size();
  return m;
}

EvalMetrics aggregate_micro(std::span<const InstanceScore> scores) {
  if (scores.empty()) throw Error("cannot aggregate an empty score list");
  std::size_t hits = 0, gold = 0, pred = 0;
  for (const auto& s : scores) {
    hits += s.hits;
    gold += s.gold_size;
    pred += s.pred_size;
  }
  EvalMetrics m;
  m.recall = gold == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(gold);
  m.precision = pred == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(pred);
  m.f1 = f1_score(m.recall, m.precision);
  m.avg_pred_len = static_cast<double>(pred) / static_cast<double>(scores.size());
  m.n_instances = scores.size();
  return m;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> id_order(std::span<const PairExample> ex) {
  std::vector<std::size_t> idx(ex.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(ex[a].seed_id, ex[a].similar_id) < std::tie(ex[b].seed_id, ex[b].similar_id);
  });
  return idx;
}

std::vector<Stratum> partition(const std::vector<std::size_t>& sorted, std::size_t parts,
                               const std::vector<std::string>& names,
                               const std::vector<std::string>& descriptions) {
  std::vector<Stratum> out;
  const std::size_t n = sorted.size();
  for (std::size_t k = 0; k < parts; ++k) {
    Stratum s{names[k], descriptions[k], {}};
    for (std::size_t i = k * n / parts; i < (k + 1) * n / parts; ++i) s.members.push_back(sorted[i]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<Stratum> stratify_by_clicks(std::span<const PairExample> examples) {
  auto order = id_order(examples);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].combined_clicks > examples[b].combined_clicks;
  });
  std::vector<Stratum> out;
  if (examples.empty()) return out;
  const std::size_t top = std::max<std::size_t>(1, examples.size() / 1000);
  out.push_back({"top_0.1pct", "most clicked 0.1% of pairs (at least one)",
                 std::vector<std::size_t>(order.begin(), order.begin() + top)});
  auto thirds = partition(order, 3, {"top_third", "middle_third", "bottom_third"},
                          {"most clicked third", "middle third by clicks", "least clicked third"});
  out.insert(out.end(), thirds.begin(), thirds.end());
  return out;
}

SimilarityStrata stratify_by_similarity(std::span<const PairExample> examples,
                                        const PairScores& scores) {
  SimilarityStrata out;
  std::vector<std::size_t> scored;
  std::unordered_map<std::size_t, double> value;
  for (std::size_t i : id_order(examples)) {
    auto it = scores.find({examples[i].seed_id, examples[i].similar_id});
    if (it == scores.end()) {
      ++out.missing;
      continue;
    }
    scored.push_back(i);
    value[i] = it->second;
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
  out.strata = partition(scored, 5, {"sim_q1", "sim_q2", "sim_q3", "sim_q4", "sim_q5"},
                         {"least similar fifth", "second fifth", "middle fifth", "fourth fifth",
                          "most similar fifth"});
  return out;
}

PairScores load_pair_scores(std::istream& in) {
  PairScores out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      double s = j.at("score").get<double>();
      if (!std::isfinite(s)) throw Error("non-finite score");
      out[{j.at("seed_id").get<std::string>(), j.at("similar_id").get<std::string>()}] = s;
    } catch (const nlohmann::json::exception& e) {
      throw Error("pair score line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("pair score line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

EvalSummary evaluate_model(std::span<const PairExample> examples,
                           std::span<const Prediction> predictions, std::string_view model,
                           std::span<const Stratum> strata, const EvalOptions& options) {
  std::map<PairKey, const Prediction*> by_pair;
  for (const auto& p : predictions) {
    if (p.model == model) by_pair[{p.seed_id, p.similar_id}] = &p;
  }

  EvalSummary summary;
  std::vector<std::optional<InstanceScore>> tok(examples.size()), ttl(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    auto it = by_pair.find({ex.seed_id, ex.similar_id});
    if (it == by_pair.end()) {
      ++summary.missing_predictions;
      continue;
    }
    std::set<std::string> gold(ex.gold_tokens.begin(), ex.gold_tokens.end());
    std::set<std::string> pred;
    for (const auto& t : it->second->tokens) pred.insert(to_lower(t));
    tok[i] = token_metrics(gold, pred);
    ttl[i] = title_metrics(ex.similar_title_tokens, gold, pred);
    if (!tok[i]) ++summary.empty_gold_excluded;
  }

  auto rows_for = [&](const std::string& name, const std::vector<std::size_t>& members) {
    for (auto [gran, scores] : {std::pair{"token", &tok}, std::pair{"title", &ttl}}) {
      std::vector<InstanceScore> picked;
      for (std::size_t i : members) {
        if ((*scores)[i]) picked.push_back(*(*scores)[i]);
      }
      if (picked.empty()) continue;
      summary.rows.push_back({std::string(model), gran, name,
                              options.micro ? aggregate_micro(picked) : aggregate(picked)});
    }
  };

  std::vector<std::size_t> all(examples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  rows_for("all", all);
  for (const auto& s : strata) rows_for(s.name, s.members);
  return summary;
}

void write_metrics_csv(std::ostream& out, std::span<const EvalRow> rows) {
  out << "model,granularity,stratum,R,P,F1,L,N\n";
  for (const auto& r : rows) {
    out << csv_escape(r.model) << ',' << r.granularity << ',' << csv_escape(r.stratum) << ','
        << format_fixed(100.0 * r.metrics.recall, 2) << ','
        << format_fixed(100.0 * r.metrics.precision, 2) << ','
        << format_fixed(100.0 * r.metrics.f1, 2) << ',' << format_fixed(r.metrics.avg_pred_len, 2)
        << ',' << r.metrics.n_instances << '\n';
  }
}

}  // namespace hilite

#pragma once

// Naive recount-and-relabel of raw click events. Deliberately shares nothing
// with the library except the word tokenizer: every count is recomputed with
// nested loops over the raw rows.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hilite/log_ingest.hpp"
#include "hilite/tokenize.hpp"

namespace oracle {

struct Row {
  std::string seed_id, similar_id;
  std::vector<std::string> title_tokens;  // unique lowercase, title order
  std::vector<std::int64_t> counts;
  std::int64_t combined = 0;
  std::vector<std::string> gold;
  std::string verdict;  // "kept" or a drop reason
};

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string norm(const std::string& q) {
  std::istringstream in(lower(q));
  std::string w, out;
  while (in >> w) out += (out.empty() ? "" : " ") + w;
  return out;
}

struct Thresholds {
  double p = 0.09, cap = 0.4;
  std::int64_t min_clicks = 20;
  std::size_t min_len = 7, min_nonzero = 3;
};

inline std::vector<Row> relabel(const std::vector<hilite::SessionEvent>& ev,
                                const hilite::ArticleTable& articles, const Thresholds& t) {
  // 1. Pair -> query -> count, by scanning every ordered pair of rows.
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::int64_t>> counts;
  auto min_rank = [&](std::size_t i) {  // smallest rank of this article in the row's group
    int r = ev[i].rank;
    for (std::size_t k = 0; k < ev.size(); ++k) {
      if (ev[k].session_id == ev[i].session_id && norm(ev[k].query) == norm(ev[i].query) &&
          ev[k].article_id == ev[i].article_id)
        r = std::min(r, ev[k].rank);
    }
    return r;
  };
  auto first_row = [&](std::size_t i) {  // is this row the article's earliest click?
    for (std::size_t k = 0; k < ev.size(); ++k) {
      if (ev[k].session_id == ev[i].session_id && norm(ev[k].query) == norm(ev[i].query) &&
          ev[k].article_id == ev[i].article_id && (ev[k].rank < ev[i].rank || (ev[k].rank == ev[i].rank && k < i)))
        return false;
    }
    return true;
  };
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (i == j || ev[i].session_id != ev[j].session_id) continue;
      if (norm(ev[i].query) != norm(ev[j].query) || ev[i].article_id == ev[j].article_id) continue;
      if (!first_row(i) || !first_row(j)) continue;
      if (min_rank(i) < min_rank(j)) ++counts[{ev[i].article_id, ev[j].article_id}][norm(ev[i].query)];
    }
  }

  // 2. Token counts, filters, softmax threshold and cap per pair.
  std::vector<Row> rows;
  for (const auto& [pair, qc] : counts) {
    Row r;
    r.seed_id = pair.first;
    r.similar_id = pair.second;
    for (const auto& [q, c] : qc) r.combined += c;
    auto seed = articles.find(r.seed_id);
    auto sim = articles.find(r.similar_id);
    if (seed == articles.end() || sim == articles.end()) {
      r.verdict = "missing_metadata";
      rows.push_back(r);
      continue;
    }
    const auto words = hilite::word_tokenize(sim->second.title);
    for (const auto& w : words) {
      const auto lw = lower(w.text);
      if (std::find(r.title_tokens.begin(), r.title_tokens.end(), lw) == r.title_tokens.end())
        r.title_tokens.push_back(lw);
    }
    std::size_t nonzero = 0;
    for (const auto& tok : r.title_tokens) {
      std::int64_t c = 0;
      for (const auto& [q, n] : qc) {
        bool hit = false;
        for (const auto& qw : hilite::word_tokenize(q)) hit = hit || lower(qw.text) == tok;
        if (hit) c += n;
      }
      r.counts.push_back(c);
      nonzero += c > 0;
    }
    if (r.combined < t.min_clicks) r.verdict = "min_clicks";
    else if (words.size() < t.min_len) r.verdict = "min_title_len";
    else if (nonzero < t.min_nonzero) r.verdict = "min_nonzero";
    if (!r.verdict.empty()) {
      rows.push_back(r);
      continue;
    }
    const std::size_t n = r.counts.size();
    const double mx = static_cast<double>(*std::max_element(r.counts.begin(), r.counts.end()));
    std::vector<double> prob(n);
    double z = 0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(static_cast<double>(r.counts[i]) / mx - 1.0);
    for (std::size_t i = 0; i < n; ++i) prob[i] = std::exp(static_cast<double>(r.counts[i]) / mx - 1.0) / z;
    std::vector<std::size_t> pass;
    for (std::size_t i = 0; i < n; ++i)
      if (prob[i] >= t.p - 1e-12) pass.push_back(i);
    const auto cap = static_cast<std::size_t>(std::floor(t.cap * static_cast<double>(n) + 1e-9));
    while (pass.size() > cap) {  // drop the weakest: lowest prob, then lowest count, then latest
      std::size_t worst = 0;
      for (std::size_t k = 1; k < pass.size(); ++k) {
        const auto a = pass[k], b = pass[worst];
        if (prob[a] < prob[b] || (prob[a] == prob[b] && (r.counts[a] < r.counts[b] ||
                                                         (r.counts[a] == r.counts[b] && a > b))))
          worst = k;
      }
      pass.erase(pass.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    for (std::size_t i : pass) r.gold.push_back(r.title_tokens[i]);
    r.verdict = r.gold.empty() ? "no_gold" : "kept";
    rows.push_back(r);
  }
  return rows;
}

}  // namespace oracle

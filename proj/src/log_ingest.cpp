#include "hilite/log_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "hilite/common.hpp"

namespace hilite {

namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::optional<SessionEvent> parse_log_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto cols = split(line, '\t');
  if (cols.size() != 5) return std::nullopt;

  SessionEvent e;
  e.session_id = std::string(trim(cols[0]));
  if (e.session_id.empty()) return std::nullopt;
  if (!parse_int(cols[1], e.timestamp)) return std::nullopt;
  auto query = trim(cols[2]);
  if (query.empty()) return std::nullopt;
  e.query = std::string(query);
  if (!parse_int(cols[3], e.rank) || e.rank < 1) return std::nullopt;
  e.article_id = std::string(trim(cols[4]));
  if (e.article_id.empty()) return std::nullopt;
  return e;
}

ParseResult parse_log(std::istream& in) {
  if (!in) throw Error("log stream is not readable");
  ParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (auto e = parse_log_line(line)) {
      result.events.push_back(std::move(*e));
    } else {
      ++result.malformed;
    }
  }
  if (in.bad()) throw Error("read failure while parsing log");
  return result;
}

void write_log_line(std::ostream& out, const SessionEvent& e) {
  out << e.session_id << '\t' << e.timestamp << '\t' << e.query << '\t'
      << e.rank << '\t' << e.article_id << '\n';
}

std::vector<CoclickInstance> extract_coclicks(std::span<const SessionEvent> events) {
  // (session, normalized query) -> indices of events in that group
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < events.size(); ++i) {
    groups[{events[i].session_id, normalize_query(events[i].query)}].push_back(i);
  }

  std::vector<CoclickInstance> out;
  for (auto& [key, idx] : groups) {
    if (idx.size() < 2) continue;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return events[a].rank < events[b].rank;
    });
    // First click per article wins; after the sort that is its smallest rank.
    std::vector<std::size_t> clicks;
    for (std::size_t i : idx) {
      bool seen = std::any_of(clicks.begin(), clicks.end(), [&](std::size_t j) {
        return events[j].article_id == events[i].article_id;
      });
      if (!seen) clicks.push_back(i);
    }
    for (std::size_t a = 0; a < clicks.size(); ++a) {
      for (std::size_t b = a + 1; b < clicks.size(); ++b) {
        const auto& seed = events[clicks[a]];
        const auto& similar = events[clicks[b]];
        if (seed.rank >= similar.rank) continue;
        out.push_back({seed.article_id, similar.article_id, seed.query});
      }
    }
  }
  return out;
}

AggregateMap aggregate_pairs(std::span<const CoclickInstance> instances) {
  AggregateMap out;
  for (const auto& inst : instances) {
    auto& agg = out[{inst.seed_id, inst.similar_id}];
    if (agg.seed_id.empty()) {
      agg.seed_id = inst.seed_id;
      agg.similar_id = inst.similar_id;
    }
    ++agg.query_counts[normalize_query(inst.query)];
    ++agg.combined_clicks;
  }
  return out;
}

AggregateMap merge_aggregates(AggregateMap a, const AggregateMap& b) {
  for (const auto& [key, agg] : b) {
    auto [it, inserted] = a.try_emplace(key, agg);
    if (inserted) continue;
    for (const auto& [q, n] : agg.query_counts) it->second.query_counts[q] += n;
    it->second.combined_clicks += agg.combined_clicks;
  }
  return a;
}

AggregateMap aggregate_events(std::span<const SessionEvent> events, unsigned threads) {
  const auto instances = extract_coclicks(events);
  if (threads == 0) threads = default_threads();
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(threads, instances.size()));
  std::vector<AggregateMap> partial(shards);
  const std::size_t chunk = (instances.size() + shards - 1) / std::max<std::size_t>(shards, 1);
  parallel_for(shards, threads, [&](std::size_t s) {
    const std::size_t begin = std::min(instances.size(), s * chunk);
    const std::size_t end = std::min(instances.size(), begin + chunk);
    partial[s] = aggregate_pairs(std::span(instances).subspan(begin, end - begin));
  });
  AggregateMap total;
  for (auto& p : partial) total = merge_aggregates(std::move(total), p);
  return total;
}

void write_aggregates_jsonl(std::ostream& out, const AggregateMap& aggs) {
  for (const auto& [key, agg] : aggs) {
    nlohmann::ordered_json j;
    j["seed_id"] = agg.seed_id;
    j["similar_id"] = agg.similar_id;
    j["query_counts"] = nlohmann::ordered_json::object();
    for (const auto& [q, n] : agg.query_counts) j["query_counts"][q] = n;
    j["combined_clicks"] = agg.combined_clicks;
    out << j.dump() << '\n';
  }
}

AggregateMap read_aggregates_jsonl(std::istream& in) {
  AggregateMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      PairAggregate agg;
      agg.seed_id = j.at("seed_id").get<std::string>();
      agg.similar_id = j.at("similar_id").get<std::string>();
      for (auto& [q, n] : j.at("query_counts").items()) {
        agg.query_counts[q] = n.get<std::int64_t>();
      }
      agg.combined_clicks = j.at("combined_clicks").get<std::int64_t>();
      std::int64_t sum = 0;
      for (const auto& [q, n] : agg.query_counts) sum += n;
      if (sum != agg.combined_clicks) {
        throw Error("combined_clicks does not match query_counts");
      }
      out = merge_aggregates(std::move(out), AggregateMap{{{agg.seed_id, agg.similar_id}, agg}});
    } catch (const nlohmann::json::exception& e) {
      throw Error("aggregate line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("aggregate line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ArticleTable read_articles_tsv(std::istream& in) {
  ArticleTable out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() < 2 || cols.size() > 3) {
      throw Error("articles line " + std::to_string(lineno) + ": expected 3 columns");
    }
    Article a;
    a.id = std::string(trim(cols[0]));
    a.title = std::string(trim(cols[1]));
    if (cols.size() == 3) a.abstract_text = std::string(trim(cols[2]));
    if (a.id.empty() || a.title.empty()) {
      throw Error("articles line " + std::to_string(lineno) + ": empty id or title");
    }
    out[a.id] = std::move(a);
  }
  return out;
}

void write_articles_tsv(std::ostream& out, const ArticleTable& articles) {
  for (const auto& [id, a] : articles) {
    out << a.id << '\t' << a.title << '\t' << a.abstract_text << '\n';
  }
}

}  // namespace hilite

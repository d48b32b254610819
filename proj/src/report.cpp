#include "hilite/report.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "hilite/common.hpp"

namespace hilite {

std::optional<RenderFormat> parse_render_format(std::string_view name) {
  if (name == "plain") return RenderFormat::kPlain;
  if (name == "markdown" || name == "md") return RenderFormat::kMarkdown;
  if (name == "html") return RenderFormat::kHtml;
  return std::nullopt;
}

namespace {

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string emit(std::string_view s, RenderFormat f) {
  return f == RenderFormat::kHtml ? html_escape(s) : std::string(s);
}

}  // namespace

std::string highlight_text(std::string_view text, std::span<const WordToken> tokens,
                           const std::set<std::size_t>& positions, RenderFormat format) {
  if (!positions.empty() && *positions.rbegin() >= tokens.size()) {
    throw Error("highlight position " + std::to_string(*positions.rbegin()) + " out of range for a " +
                std::to_string(tokens.size()) + "-token title");
  }
  std::string out;
  std::size_t cursor = 0;
  for (std::size_t pos : positions) {
    const auto& t = tokens[pos];
    out += emit(text.substr(cursor, t.start - cursor), format);
    const std::string body = emit(text.substr(t.start, t.end - t.start), format);
    switch (format) {
      case RenderFormat::kPlain: out += "[" + body + "]"; break;
      case RenderFormat::kMarkdown: out += "**" + body + "**"; break;
      case RenderFormat::kHtml: out += "<mark>" + body + "</mark>"; break;
    }
    cursor = t.end;
  }
  out += emit(text.substr(cursor), format);
  return out;
}

std::set<std::size_t> gold_positions(const PairExample& ex) {
  const std::set<std::string> gold(ex.gold_tokens.begin(), ex.gold_tokens.end());
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < ex.similar_title_tokens.size(); ++i) {
    if (gold.count(to_lower(ex.similar_title_tokens[i].text))) out.insert(i);
  }
  return out;
}

std::string render_case(const PairExample& ex, std::span<const Prediction> predictions,
                        RenderFormat format) {
  std::ostringstream out;
  auto row = [&](const std::string& label, const std::set<std::size_t>& pos) {
    const auto title = highlight_text(ex.similar_title, ex.similar_title_tokens, pos, format);
    switch (format) {
      case RenderFormat::kPlain: out << "  " << label << ": " << title << '\n'; break;
      case RenderFormat::kMarkdown: out << "| " << label << " | " << title << " |\n"; break;
      case RenderFormat::kHtml:
        out << "<tr><td>" << html_escape(label) << "</td><td>" << title << "</td></tr>\n";
        break;
    }
  };

  const std::string header = ex.seed_id + " -> " + ex.similar_id;
  switch (format) {
    case RenderFormat::kPlain:
      out << header << "\n  seed: " << ex.seed_title << '\n';
      break;
    case RenderFormat::kMarkdown:
      out << "### " << header << "\n\nSeed: " << ex.seed_title << "\n\n| model | similar title |\n|---|---|\n";
      break;
    case RenderFormat::kHtml:
      out << "<section>\n<h3>" << html_escape(header) << "</h3>\n<p>Seed: " << html_escape(ex.seed_title)
          << "</p>\n<table>\n";
      break;
  }
  for (const auto& p : predictions) {
    row(p.model, std::set<std::size_t>(p.positions.begin(), p.positions.end()));
  }
  if (!ex.gold_tokens.empty()) row("gold", gold_positions(ex));
  if (format == RenderFormat::kHtml) out << "</table>\n</section>\n";
  if (format == RenderFormat::kMarkdown) out << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

std::map<PairKey, const Prediction*> index_predictions(std::span<const Prediction> preds,
                                                       std::string& model, const char* side) {
  std::map<PairKey, const Prediction*> out;
  for (const auto& p : preds) {
    if (model.empty()) model = p.model;
    if (p.model != model) {
      throw Error(std::string("A/B study: output ") + side + " mixes models '" + model + "' and '" +
                  p.model + "'");
    }
    if (!out.emplace(PairKey{p.seed_id, p.similar_id}, &p).second) {
      throw Error(std::string("A/B study: output ") + side + " repeats pair " + p.seed_id + "/" +
                  p.similar_id);
    }
  }
  return out;
}

}  // namespace

AbStudy emit_ab_study(std::span<const PairExample> examples, std::span<const Prediction> outputs_a,
                      std::span<const Prediction> outputs_b, std::uint64_t seed) {
  std::string model_a, model_b;
  const auto a = index_predictions(outputs_a, model_a, "A");
  const auto b = index_predictions(outputs_b, model_b, "B");
  if (a.size() != examples.size() || b.size() != examples.size()) {
    throw Error("A/B study: outputs cover " + std::to_string(a.size()) + " and " +
                std::to_string(b.size()) + " pairs, expected " + std::to_string(examples.size()));
  }

  Rng rng(derive_seed(seed, "ab-study"));
  std::ostringstream sheet, key;
  sheet << "instance_id,seed_title,title_left_highlighted,title_right_highlighted\n";
  key << "instance_id,left_model,right_model\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const PairKey k{ex.seed_id, ex.similar_id};
    auto ia = a.find(k);
    auto ib = b.find(k);
    if (ia == a.end() || ib == b.end()) {
      throw Error("A/B study: no output for pair " + ex.seed_id + "/" + ex.similar_id);
    }
    const Prediction* left = ia->second;
    const Prediction* right = ib->second;
    if (rng.bernoulli(0.5)) std::swap(left, right);
    auto render = [&](const Prediction* p) {
      return highlight_text(ex.similar_title, ex.similar_title_tokens,
                            std::set<std::size_t>(p->positions.begin(), p->positions.end()),
                            RenderFormat::kPlain);
    };
    const std::string id = std::to_string(i + 1);
    sheet << id << ',' << csv_escape(ex.seed_title) << ',' << csv_escape(render(left)) << ','
          << csv_escape(render(right)) << '\n';
    key << id << ',' << csv_escape(left->model) << ',' << csv_escape(right->model) << '\n';
  }
  return {sheet.str(), key.str()};
}

PreferenceTally tally_preferences(std::istream& marked, std::istream& key) {
  std::map<std::string, std::pair<std::string, std::string>> sides;
  PreferenceTally t;
  std::string line;
  bool header = true;
  while (std::getline(key, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = csv_parse_line(line);
    if (f.size() != 3) throw Error("key row has " + std::to_string(f.size()) + " fields: " + line);
    for (const auto& m : {f[1], f[2]}) {
      if (t.model_a.empty()) t.model_a = m;
      else if (m != t.model_a && t.model_b.empty()) t.model_b = m;
      else if (m != t.model_a && m != t.model_b) throw Error("key names a third model: " + m);
    }
    sides[f[0]] = {f[1], f[2]};
  }
  // Report models in a stable order regardless of which was seen first.
  if (!t.model_b.empty() && t.model_b < t.model_a) std::swap(t.model_a, t.model_b);

  header = true;
  std::set<std::string> seen;
  while (std::getline(marked, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = csv_parse_line(line);
    if (f.size() < 2) throw Error("marked row needs instance_id,choice: " + line);
    auto it = sides.find(f[0]);
    if (it == sides.end()) throw Error("marked sheet names unknown instance " + f[0]);
    if (!seen.insert(f[0]).second) throw Error("instance " + f[0] + " marked twice");
    const auto choice = to_lower(trim(f[1]));
    std::string chosen;
    if (choice == "left") chosen = it->second.first;
    else if (choice == "right") chosen = it->second.second;
    else if (choice == "neutral") {
      ++t.neutral;
      continue;
    } else {
      throw Error("instance " + f[0] + ": choice must be left, right or neutral, got '" + f[1] + "'");
    }
    ++(chosen == t.model_a ? t.prefer_a : t.prefer_b);
  }
  return t;
}

void write_tally_csv(std::ostream& out, const PreferenceTally& t) {
  out << "preference,count\n"
      << csv_escape(t.model_a) << ',' << t.prefer_a << '\n'
      << csv_escape(t.model_b) << ',' << t.prefer_b << '\n'
      << "neutral," << t.neutral << '\n';
}

// ---------------------------------------------------------------------------

CorpusStats corpus_stats(std::span<const PairExample> examples,
                         std::span<const std::int64_t> thresholds) {
  static constexpr std::int64_t kEdges[] = {20, 50, 100, 200, 500, 1000};
  CorpusStats s;
  s.pairs = examples.size();
  std::vector<std::size_t> buckets(std::size(kEdges) + 1, 0);
  double len_sum = 0.0;
  for (const auto& ex : examples) {
    const auto b = static_cast<std::size_t>(
        std::upper_bound(std::begin(kEdges), std::end(kEdges), ex.combined_clicks) - std::begin(kEdges));
    ++buckets[b];
    const auto n = ex.similar_title_tokens.size();
    ++s.title_length_counts[n];
    len_sum += static_cast<double>(n);
  }
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const std::string lo = b == 0 ? "0" : std::to_string(kEdges[b - 1]);
    const std::string hi = b < std::size(kEdges) ? std::to_string(kEdges[b] - 1) : "inf";
    s.click_histogram.emplace_back(lo + "-" + hi, buckets[b]);
  }
  s.mean_title_length = examples.empty() ? 0.0 : len_sum / static_cast<double>(examples.size());
  for (auto t : thresholds) {
    const auto n = static_cast<std::size_t>(std::count_if(
        examples.begin(), examples.end(), [&](const PairExample& ex) { return ex.combined_clicks >= t; }));
    if (!s.size_at_threshold.empty() && n > s.size_at_threshold.back().second) s.sizes_monotone = false;
    s.size_at_threshold.emplace_back(t, n);
  }
  return s;
}

void write_corpus_stats(std::ostream& out, const CorpusStats& s) {
  out << "pairs: " << s.pairs << "\n\nclick histogram (combined clicks):\n";
  for (const auto& [label, n] : s.click_histogram) out << "  " << label << '\t' << n << '\n';
  out << "\nsimilar title length (tokens):\n";
  for (const auto& [len, n] : s.title_length_counts) out << "  " << len << '\t' << n << '\n';
  out << "mean title length: " << format_fixed(s.mean_title_length, 2)
      << " (reference " << format_fixed(kReferenceTitleLength, 1) << ")\n\npairs at click threshold:\n";
  for (const auto& [t, n] : s.size_at_threshold) out << "  >=" << t << '\t' << n << '\n';
  if (!s.sizes_monotone) out << "warning: sizes increase with the threshold\n";
}

}  // namespace hilite

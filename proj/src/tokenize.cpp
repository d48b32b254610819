#include "hilite/tokenize.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include "hilite/common.hpp"

namespace hilite {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_edge_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '"': case '\'': case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as its own unit
}

/// Byte offsets of character boundaries, including 0 and size().
std::vector<std::size_t> char_boundaries(std::string_view s) {
  std::vector<std::size_t> b;
  std::size_t i = 0;
  while (i < s.size()) {
    b.push_back(i);
    i += std::min(utf8_len(static_cast<unsigned char>(s[i])), s.size() - i);
  }
  b.push_back(s.size());
  return b;
}

}  // namespace

std::vector<WordToken> word_tokenize(std::string_view text) {
  std::vector<WordToken> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    out.push_back({std::string(text.substr(b, e - b)), b, e, out.size()});
  };

  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::size_t e = i;

    std::size_t lead_end = b;
    while (lead_end < e && is_edge_punct(text[lead_end])) ++lead_end;
    if (lead_end == e) {
      // All punctuation: one token per character.
      for (std::size_t k = b; k < e; ++k) emit(k, k + 1);
      continue;
    }
    std::size_t trail_begin = e;
    while (trail_begin > lead_end && is_edge_punct(text[trail_begin - 1])) --trail_begin;

    for (std::size_t k = b; k < lead_end; ++k) emit(k, k + 1);
    emit(lead_end, trail_begin);
    for (std::size_t k = trail_begin; k < e; ++k) emit(k, k + 1);
  }
  return out;
}

std::vector<std::string> lower_texts(std::span<const WordToken> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(to_lower(t.text));
  return out;
}

std::vector<std::string> unique_lower_texts(std::span<const WordToken> tokens) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens) {
    auto low = to_lower(t.text);
    if (seen.insert(low).second) out.push_back(std::move(low));
  }
  return out;
}

// ---------------------------------------------------------------------------

SubwordVocab::SubwordVocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[0] != kStart || tokens_[1] != kSep) {
    throw Error("subword vocabulary must start with the [CLS] and [SEP] markers");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("subword vocabulary contains an empty entry");
    if (!ids_.emplace(tokens_[i], i).second) {
      throw Error("duplicate subword vocabulary entry: " + tokens_[i]);
    }
    if (i >= 2) {
      max_piece_bytes_ = std::max(max_piece_bytes_, strip_continuation(tokens_[i]).size());
    }
  }
}

bool SubwordVocab::contains(std::string_view piece) const {
  return ids_.find(std::string(piece)) != ids_.end();
}

void SubwordVocab::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

SubwordVocab SubwordVocab::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return SubwordVocab(std::move(tokens));
}

std::string_view strip_continuation(std::string_view piece) {
  if (piece.starts_with(SubwordVocab::kContinuation)) {
    piece.remove_prefix(SubwordVocab::kContinuation.size());
  }
  return piece;
}

SubwordVocab build_subword_vocab(std::span<const std::string> words,
                                 const SubwordVocabOptions& options) {
  std::map<std::string, std::size_t> word_freq;
  for (const auto& w : words) {
    if (!w.empty()) ++word_freq[w];
  }

  std::set<std::string> chars;
  std::map<std::string, std::size_t> candidates;
  const std::string cont(SubwordVocab::kContinuation);
  for (const auto& [w, f] : word_freq) {
    const auto bounds = char_boundaries(w);
    const std::size_t nchars = bounds.size() - 1;
    for (std::size_t c = 0; c < nchars; ++c) {
      chars.insert(w.substr(bounds[c], bounds[c + 1] - bounds[c]));
    }
    for (std::size_t s = 0; s < nchars; ++s) {
      for (std::size_t e = s + 2; e <= nchars; ++e) {
        const std::size_t len = bounds[e] - bounds[s];
        if (len > options.max_piece_bytes) break;
        auto piece = w.substr(bounds[s], len);
        candidates[s == 0 ? piece : cont + piece] += f;
      }
    }
  }

  const std::size_t mandatory = 2 + 2 * chars.size();
  if (options.max_size < mandatory) {
    throw Error("subword vocabulary size " + std::to_string(options.max_size) +
                " is below the " + std::to_string(mandatory) +
                " entries required for markers and character fallback");
  }

  std::vector<std::string> tokens{std::string(SubwordVocab::kStart), std::string(SubwordVocab::kSep)};
  for (const auto& c : chars) tokens.push_back(c);
  for (const auto& c : chars) tokens.push_back(cont + c);

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [piece, f] : candidates) {
    if (f >= options.min_frequency) ranked.emplace_back(piece, f);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a.first < b.first;
  });
  for (const auto& [piece, f] : ranked) {
    if (tokens.size() >= options.max_size) break;
    tokens.push_back(piece);
  }
  return SubwordVocab(std::move(tokens));
}

std::vector<std::string> subword_tokenize(std::string_view word, const SubwordVocab& vocab) {
  std::vector<std::string> pieces;
  const auto bounds = char_boundaries(word);
  const std::string cont(SubwordVocab::kContinuation);
  std::size_t ci = 0;  // index into bounds
  while (ci + 1 < bounds.size()) {
    const std::size_t start = bounds[ci];
    std::size_t best = ci + 1;  // single-character fallback
    for (std::size_t e = bounds.size() - 1; e > ci + 1; --e) {
      const std::size_t len = bounds[e] - start;
      if (len > vocab.max_piece_bytes()) continue;
      std::string piece(word.substr(start, len));
      if (ci > 0) piece = cont + piece;
      if (vocab.contains(piece)) {
        best = e;
        break;
      }
    }
    std::string piece(word.substr(start, bounds[best] - start));
    pieces.push_back(ci > 0 ? cont + piece : piece);
    ci = best;
  }
  return pieces;
}

SubwordAlignment align_subwords(std::span<const std::string> words, const SubwordVocab& vocab) {
  SubwordAlignment a;
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (auto& piece : subword_tokenize(words[w], vocab)) {
      a.subwords.push_back(std::move(piece));
      a.word_of_subword.push_back(w);
    }
  }
  return a;
}

std::set<std::size_t> project_labels(const SubwordAlignment& alignment,
                                     std::span<const int> subword_labels) {
  if (subword_labels.size() != alignment.subwords.size() ||
      alignment.word_of_subword.size() != alignment.subwords.size()) {
    throw Error("label/subword length mismatch: " + std::to_string(subword_labels.size()) +
                " labels for " + std::to_string(alignment.subwords.size()) + " subwords");
  }
  std::set<std::size_t> words;
  for (std::size_t i = 0; i < subword_labels.size(); ++i) {
    if (subword_labels[i] != 0) words.insert(alignment.word_of_subword[i]);
  }
  return words;
}

std::vector<int> expand_labels(const SubwordAlignment& alignment,
                               const std::set<std::size_t>& selected_words) {
  std::vector<int> labels(alignment.subwords.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = selected_words.count(alignment.word_of_subword[i]) ? 1 : 0;
  }
  return labels;
}

}  // namespace hilite

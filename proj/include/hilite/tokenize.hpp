#pragma once

// Word tokenizer, greedy longest-match subword tokenizer, and the
// subword -> word label projection used by the tagger.

#include <cstddef>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hilite {

struct WordToken {
  std::string text;
  std::size_t start = 0;  // byte offset into the source
  std::size_t end = 0;    // one past the last byte
  std::size_t index = 0;  // 0-based word position

  bool operator==(const WordToken&) const = default;
};

/// Splits on whitespace, then peels leading and trailing punctuation
/// (. , ; : ! ? " ' ( ) [ ]) off each chunk as single-character tokens.
/// Inner punctuation stays, so "Covid-19" and "low-fat" are one token.
std::vector<WordToken> word_tokenize(std::string_view text);

/// Lowercased token texts, in order.
std::vector<std::string> lower_texts(std::span<const WordToken> tokens);

/// Unique lowercased texts in first-occurrence order.
std::vector<std::string> unique_lower_texts(std::span<const WordToken> tokens);

// ---------------------------------------------------------------------------
// Subwords
// ---------------------------------------------------------------------------

class SubwordVocab {
 public:
  static constexpr std::string_view kStart = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kContinuation = "##";

  SubwordVocab() : SubwordVocab(std::vector<std::string>{std::string(kStart), std::string(kSep)}) {}
  /// `tokens` must start with the two reserved markers.
  explicit SubwordVocab(std::vector<std::string> tokens);

  bool contains(std::string_view piece) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t max_piece_bytes() const { return max_piece_bytes_; }

  /// One token per line; the first two lines are the reserved markers.
  void save(std::ostream& out) const;
  static SubwordVocab load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t max_piece_bytes_ = 0;
};

struct SubwordVocabOptions {
  std::size_t max_size = 8000;
  /// A multi-character piece must occur in at least this many corpus word
  /// occurrences to be kept.
  std::size_t min_frequency = 2;
  std::size_t max_piece_bytes = 24;
};

/// Every distinct character of the corpus is kept both as a word-initial
/// piece and as a "##" continuation, plus the two markers. Remaining slots go
/// to the most frequent multi-character prefixes / continuations (ties: longer
/// first, then lexicographic). Throws Error if max_size cannot hold the
/// mandatory entries.
SubwordVocab build_subword_vocab(std::span<const std::string> words,
                                 const SubwordVocabOptions& options = {});

/// Greedy longest-prefix match. Falls back to a single UTF-8 character when
/// nothing longer matches, so it never fails and concatenating the pieces with
/// markers stripped gives back `word`.
std::vector<std::string> subword_tokenize(std::string_view word, const SubwordVocab& vocab);

std::string_view strip_continuation(std::string_view piece);

struct SubwordAlignment {
  std::vector<std::string> subwords;
  std::vector<std::size_t> word_of_subword;  // non-decreasing
};

SubwordAlignment align_subwords(std::span<const std::string> words, const SubwordVocab& vocab);

/// A word is selected iff any of its subwords is labeled 1. Throws Error on a
/// length mismatch.
std::set<std::size_t> project_labels(const SubwordAlignment& alignment,
                                     std::span<const int> subword_labels);

/// Training direction: every subword of a selected word gets label 1.
std::vector<int> expand_labels(const SubwordAlignment& alignment,
                               const std::set<std::size_t>& selected_words);

}  // namespace hilite

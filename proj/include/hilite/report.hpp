#pragma once

// Highlighted-title case studies, blinded A/B preference sheets and corpus
// statistics.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hilite/dataset.hpp"
#include "hilite/explain.hpp"

namespace hilite {

enum class RenderFormat { kPlain, kMarkdown, kHtml };

std::optional<RenderFormat> parse_render_format(std::string_view name);

/// Re-emits `text` with every selected word position wrapped on its own:
/// [tok] / **tok** / <mark>tok</mark>. HTML output escapes the text. Throws
/// Error when a position is out of range.
std::string highlight_text(std::string_view text, std::span<const WordToken> tokens,
                           const std::set<std::size_t>& positions, RenderFormat format);

/// Positions of the example's gold tokens in the similar title.
std::set<std::size_t> gold_positions(const PairExample& ex);

/// One block per example: the seed title, then the similar title once per
/// prediction (in the given order) and a gold row when the example has gold.
std::string render_case(const PairExample& ex, std::span<const Prediction> predictions,
                        RenderFormat format);

// ---------------------------------------------------------------------------
// A/B study
// ---------------------------------------------------------------------------

struct AbStudy {
  std::string sheet;  // instance_id,seed_title,title_left_highlighted,title_right_highlighted
  std::string key;    // instance_id,left_model,right_model
};

/// Both prediction lists must cover exactly the pairs in `examples` (each
/// once) and each must carry a single model name. Sides are swapped per
/// instance with a seeded coin flip. Highlights use plain brackets.
AbStudy emit_ab_study(std::span<const PairExample> examples, std::span<const Prediction> outputs_a,
                      std::span<const Prediction> outputs_b, std::uint64_t seed);

struct PreferenceTally {
  std::string model_a;
  std::string model_b;
  std::size_t prefer_a = 0;
  std::size_t prefer_b = 0;
  std::size_t neutral = 0;
};

/// Marked sheet: CSV instance_id,choice with choice in {left,right,neutral}.
/// Throws Error on unknown instances, bad choices or a key naming more than
/// two models.
PreferenceTally tally_preferences(std::istream& marked, std::istream& key);

void write_tally_csv(std::ostream& out, const PreferenceTally& tally);

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

struct CorpusStats {
  std::size_t pairs = 0;
  /// Upper-exclusive bucket edges 20, 50, 100, 200, 500, 1000, inf.
  std::vector<std::pair<std::string, std::size_t>> click_histogram;
  std::map<std::size_t, std::size_t> title_length_counts;
  double mean_title_length = 0.0;
  /// Pairs with combined clicks >= threshold.
  std::vector<std::pair<std::int64_t, std::size_t>> size_at_threshold;
  bool sizes_monotone = true;
};

inline constexpr double kReferenceTitleLength = 17.5;

CorpusStats corpus_stats(std::span<const PairExample> examples,
                         std::span<const std::int64_t> thresholds = std::array<std::int64_t, 3>{20, 50, 100});

void write_corpus_stats(std::ostream& out, const CorpusStats& stats);

}  // namespace hilite

#pragma once

// Token- and title-level recall / precision / F1, macro or micro
// aggregation, and click-count / similarity stratification.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hilite/dataset.hpp"
#include "hilite/explain.hpp"

namespace hilite {

struct InstanceScore {
  double recall = 0.0;
  double precision = 0.0;
  std::size_t hits = 0;
  std::size_t gold_size = 0;
  std::size_t pred_size = 0;
};

/// Set metrics over unique lowercase tokens. nullopt (instance excluded) when
/// gold is empty but something was predicted; empty gold and empty prediction
/// score r = p = 1.
std::optional<InstanceScore> token_metrics(const std::set<std::string>& gold,
                                           const std::set<std::string>& pred);

/// Expands both sets to every title position holding one of their tokens and
/// scores the position sets.
std::optional<InstanceScore> title_metrics(std::span<const WordToken> title,
                                           const std::set<std::string>& gold,
                                           const std::set<std::string>& pred);

double f1_score(double recall, double precision);

struct EvalMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  double avg_pred_len = 0.0;
  std::size_t n_instances = 0;
};

/// Mean of per-instance recall and precision, F1 of the means. Throws Error
/// on an empty list.
EvalMetrics aggregate(std::span<const InstanceScore> scores);
/// Pooled hits / gold / predicted counts.
EvalMetrics aggregate_micro(std::span<const InstanceScore> scores);

// ---------------------------------------------------------------------------
// Strata
// ---------------------------------------------------------------------------

struct Stratum {
  std::string name;
  std::string description;
  std::vector<std::size_t> members;  // indices into the evaluated example list
};

/// "top_0.1pct" (max(1, floor(n/1000)) most clicked), then "top_third",
/// "middle_third", "bottom_third" partitioning everything. Order: combined
/// clicks descending, ties by (seed_id, similar_id).
std::vector<Stratum> stratify_by_clicks(std::span<const PairExample> examples);

struct SimilarityStrata {
  std::vector<Stratum> strata;  // "sim_q1" (least similar) .. "sim_q5"
  std::size_t missing = 0;
};

using PairScores = std::map<PairKey, double>;

/// Quintiles by ascending pair score, ties by pair id. Pairs without a score
/// are left out and counted.
SimilarityStrata stratify_by_similarity(std::span<const PairExample> examples,
                                        const PairScores& scores);

/// JSON Lines {"seed_id","similar_id","score"}. Throws Error on malformed or
/// non-finite rows.
PairScores load_pair_scores(std::istream& in);

// ---------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------

enum class Granularity { kToken, kTitle };

struct EvalOptions {
  bool micro = false;
};

struct EvalRow {
  std::string model;
  std::string granularity;
  std::string stratum;
  EvalMetrics metrics;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  std::size_t missing_predictions = 0;
  std::size_t empty_gold_excluded = 0;
};

/// Scores one model's predictions on `examples` for every stratum (plus the
/// implicit "all"). Strata that end up empty are skipped.
EvalSummary evaluate_model(std::span<const PairExample> examples,
                           std::span<const Prediction> predictions, std::string_view model,
                           std::span<const Stratum> strata, const EvalOptions& options = {});

/// Header: model,granularity,stratum,R,P,F1,L,N. R/P/F1 scaled by 100.
void write_metrics_csv(std::ostream& out, std::span<const EvalRow> rows);

}  // namespace hilite

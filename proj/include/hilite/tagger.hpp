#pragma once

// Trainable per-token relevance tagger over the concatenated
//   [CLS] seed title, seed abstract [SEP] similar title
// subword sequence. Each similar-title subword is scored by a logistic model
// over features of the word it belongs to; word predictions are recovered
// with project_labels.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hilite/dataset.hpp"
#include "hilite/explain.hpp"
#include "hilite/tokenize.hpp"

namespace hilite {

struct TaggedInput {
  std::vector<std::string> tokens;
  std::vector<int> segment_ids;  // 0 seed side, 1 similar title
  std::vector<int> labels;       // 1 only on gold similar-title subwords
  std::size_t similar_begin = 0;  // index of the first similar-title subword
  SubwordAlignment similar;       // alignment of the similar-title slice
  std::size_t abstract_truncated = 0;  // abstract subwords dropped to fit
};

/// Truncates the seed abstract from the right so the whole sequence fits in
/// max_len. Throws Error if the similar title plus the two markers does not
/// fit on its own.
TaggedInput build_tagged_input(const PairExample& ex, const SubwordVocab& vocab,
                               std::size_t max_len);

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// kSplit keeps in_seed_title and in_seed_abstract apart; kMerged replaces
/// both with a single in_seed_anywhere flag (ablation).
enum class FeatureSet { kSplit, kMerged };

std::vector<std::string> feature_names(FeatureSet set);
std::string_view feature_set_name(FeatureSet set);
std::optional<FeatureSet> parse_feature_set(std::string_view name);

struct FeatureResources {
  const IdfTable* idf = nullptr;             // required
  const StopwordSet* stopwords = nullptr;    // required
  const EmbeddingTable* embeddings = nullptr;  // optional; cosine features are 0 without it
};

/// One row per similar-title word, flattened row-major.
std::vector<double> word_features(const PairExample& ex, const FeatureResources& res,
                                  FeatureSet set);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct TaggerConfig {
  /// Peak learning rate is 5e-5 * lr_scale.
  double lr_scale = 200.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// 0 means max(100, total_steps / 10).
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 2000;
  std::size_t batch_size = 64;
  std::size_t eval_every = 100;
  std::size_t max_len = 256;
  double decision_threshold = 0.5;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  FeatureSet features = FeatureSet::kSplit;

  double peak_lr() const { return 5e-5 * lr_scale; }
  std::size_t effective_warmup() const;
};

/// Linear warmup from 0 to the peak, then cosine decay to 0 at total_steps.
double learning_rate(std::size_t step, const TaggerConfig& config);

struct TaggerParams {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  std::size_t step = 0;
  TaggerConfig config;
};

/// One training/eval instance: features and labels of the similar-title
/// subwords only.
struct TaggerInstance {
  std::size_t rows = 0;
  std::vector<double> features;  // rows x dim, row-major
  std::vector<int> labels;
  SubwordAlignment alignment;
};

TaggerInstance make_instance(const PairExample& ex, const SubwordVocab& vocab,
                             const FeatureResources& res, const TaggerConfig& config);

/// sigma(w . x) per row.
std::vector<double> forward(std::span<const double> weights, std::span<const double> features,
                            std::size_t rows);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t tokens = 0;
};

/// Mean binary cross-entropy over all similar-title subwords in the batch and
/// its gradient. Partial sums are reduced in batch order, so the result does
/// not depend on `threads`.
LossAndGrad loss_and_grad(std::span<const double> weights,
                          std::span<const TaggerInstance* const> batch, unsigned threads = 1);

struct TrainLogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;
};

struct TrainResult {
  TaggerParams best;  // checkpoint with the best dev token-level F1
  double best_dev_f1 = 0.0;
  std::vector<TrainLogRow> log;
  std::size_t skipped_train = 0;
};

class TaggerModel {
 public:
  TaggerModel(TaggerParams params, SubwordVocab vocab, FeatureResources res);

  const TaggerParams& params() const { return params_; }
  const SubwordVocab& vocab() const { return vocab_; }
  const FeatureResources& resources() const { return res_; }

  /// Per-subword probabilities for the similar title.
  std::vector<double> probabilities(const PairExample& ex) const;
  /// Similar-title word indices whose subwords reach the threshold.
  std::set<std::size_t> predict_words(const PairExample& ex, double threshold) const;
  std::set<std::size_t> predict_words(const PairExample& ex) const {
    return predict_words(ex, params_.config.decision_threshold);
  }

 private:
  TaggerParams params_;
  SubwordVocab vocab_;
  FeatureResources res_;
};

/// Adam with warmup + cosine schedule. Throws Error on empty sets or a
/// non-finite loss.
TrainResult train_tagger(std::span<const PairExample> train_set,
                         std::span<const PairExample> dev_set, const SubwordVocab& vocab,
                         const FeatureResources& res, const TaggerConfig& config);

/// Vocabulary over lowercased words of every seed title, abstract and similar
/// title in the set.
SubwordVocab build_tagger_vocab(std::span<const PairExample> examples,
                                std::size_t max_size = 8000);

/// {"format","version","feature_set","feature_names","weights","config","step","vocab_file"}
void save_checkpoint(std::ostream& out, const TaggerParams& params, const std::string& vocab_file);
struct LoadedCheckpoint {
  TaggerParams params;
  std::string vocab_file;
};
LoadedCheckpoint load_checkpoint(std::istream& in);

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows);

}  // namespace hilite

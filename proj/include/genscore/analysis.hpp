#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genscore/metaeval.hpp"
#include "genscore/types.hpp"

namespace genscore {

// One dataset (or language pair) with the metric scores to analyse. The
// pointed-to corpus and table must outlive the analysis call.
struct DatasetScores {
  std::string name;
  const Corpus* corpus = nullptr;
  const MetricScoreTable* scores = nullptr;
  std::vector<PreferencePair> preferences;
};

// Systems ordered best-first by mean human judgment on `perspective`; ties
// by system id.
std::vector<std::string> rank_systems_by_human(const Corpus& corpus, Perspective perspective);

struct TopkRow {
  std::size_t k = 0;  // as requested
  double mean_value = 0.0;
  std::size_t datasets = 0;
};

struct TopkResult {
  std::vector<TopkRow> rows;
  std::vector<std::string> warnings;  // clamped k values
};

// Correlation restricted to each dataset's top-k systems (ranked by human
// mean on spec.perspective), averaged across datasets. k beyond a dataset's
// system count is clamped with a warning.
TopkResult topk_analysis(const std::vector<DatasetScores>& datasets, const AgreementSpec& spec,
                         const std::vector<std::size_t>& ks);

struct LengthBucket {
  std::size_t lower = 0;
  std::size_t upper = 0;
  bool upper_inclusive = false;

  bool contains(std::size_t length) const {
    return length >= lower && (upper_inclusive ? length <= upper : length < upper);
  }
  std::string label() const;
};

// [15,25) [25,35) [35,45) [45,54]
std::vector<LengthBucket> default_length_buckets();

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

struct BucketDatasetResult {
  std::string dataset;
  std::size_t instances = 0;
  bool retained = false;
  std::optional<double> value;
};

struct BucketResult {
  LengthBucket bucket;
  std::optional<double> mean_value;  // absent when no dataset survives
  std::vector<BucketDatasetResult> datasets;
};

struct LengthBucketOptions {
  std::vector<LengthBucket> buckets = default_length_buckets();
  std::size_t min_instances = 500;  // datasets below this are dropped per bucket
};

// Index of the bucket holding each instance (by first-reference length), or
// nullopt when it falls outside every bucket. Throws DataError for an
// instance without references.
std::vector<std::optional<std::size_t>> assign_length_buckets(
    const Corpus& corpus, const Tokenizer& tokenizer, const std::vector<LengthBucket>& buckets);

std::vector<BucketResult> length_bucket_analysis(const std::vector<DatasetScores>& datasets,
                                                 const AgreementSpec& spec,
                                                 const Tokenizer& tokenizer,
                                                 const LengthBucketOptions& options = {});

enum class PerspectiveCategory { kSemanticOverlap, kLinguisticQuality, kFactualCorrectness };

std::string_view category_name(PerspectiveCategory c);
// Info/Cov/Rel, Flu/Coh, Fac; Ade belongs to no category.
std::optional<PerspectiveCategory> category_of(Perspective p);

struct PromptPerspectiveResult {
  std::string dataset;
  Perspective perspective = Perspective::kInfo;
  std::optional<double> baseline;  // promptless correlation
  std::vector<double> prompt_values;
};

// Per category, the mean over (dataset, perspective) entries of the fraction
// of prompts whose value strictly exceeds the baseline. Fractions in [0, 1].
std::map<PerspectiveCategory, double> prompt_category_analysis(
    const std::vector<PromptPerspectiveResult>& results);

struct RankDifference {
  std::string system_id;
  std::size_t human_rank = 0;   // 1 = best
  std::size_t metric_rank = 0;
  long difference = 0;          // human_rank - metric_rank
};

// Ranks systems by mean human judgment and by mean metric score.
std::vector<RankDifference> bias_rank_difference(const Corpus& corpus,
                                                 const MetricScoreTable& scores,
                                                 Perspective perspective);

}  // namespace genscore

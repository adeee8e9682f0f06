#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "genscore/backend.hpp"
#include "genscore/prompting.hpp"
#include "genscore/types.hpp"

namespace genscore {

struct UniformWeights {};

// Uniform, with stopwords weighted 0.
struct NoStopWeights {
  std::set<std::string, std::less<>> stopwords;
};

struct IdfWeights {
  std::map<std::string, std::int64_t, std::less<>> document_frequency;
  std::int64_t documents = 1;
};

// Each token weighted by its relative frequency within the target.
struct TargetPriorWeights {};

using WeightScheme = std::variant<UniformWeights, NoStopWeights, IdfWeights, TargetPriorWeights>;

enum class Direction { kFaithfulness, kPrecision, kRecall, kFScore };
enum class Aggregation { kMean, kSum };
enum class MultiRefAggregation { kMax, kMean };

std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view name);

// ln((1 + N) / (1 + df)) + 1. Throws UsageError unless 0 <= df <= N, N >= 1.
double idf_weight(std::int64_t df, std::int64_t documents);

std::vector<double> target_prior_weights(std::span<const std::string> tokens);

std::vector<double> token_weights(const WeightScheme& scheme,
                                  std::span<const std::string> tokens);

// Sum_t w_t * lp_t, divided by Sum_t w_t under kMean. Throws UsageError when
// the weights sum to zero under kMean.
double weighted_score(std::span<const double> logprobs, std::span<const double> weights,
                      Aggregation aggregation);

// Weights from `scheme`, zeroed where `mask` is false (empty mask = all on).
double weighted_score(const ScoredSequence& seq, const WeightScheme& scheme,
                      Aggregation aggregation, const std::vector<bool>& mask = {});

// Document frequencies over whitespace-free token sets of `documents`.
IdfWeights build_idf(const Backend& backend, std::span<const std::string> documents);

// Small English stopword list used when no file is given.
const std::set<std::string, std::less<>>& default_stopwords();
NoStopWeights load_stopwords(const std::filesystem::path& path);

struct ScoreConfig {
  Direction direction = Direction::kFaithfulness;
  WeightScheme weights = UniformWeights{};
  Aggregation aggregation = Aggregation::kMean;
  MultiRefAggregation multi_ref = MultiRefAggregation::kMax;
  std::optional<PromptApplication> prompt;
};

// Canonical serialization. Field order: direction, weights, aggregation,
// multi_ref, prompt, backend.
nlohmann::ordered_json config_to_json(const ScoreConfig& config,
                                      const BackendDescriptor& backend);
std::string config_digest(const ScoreConfig& config, const BackendDescriptor& backend);

// Weighted score of `target` given `source`, applying the configured prompt
// (single or ensemble). Direction and multi_ref are ignored here.
double score_pair(const Backend& backend, std::string_view source, std::string_view target,
                  const ScoreConfig& config);

double score_direction(const Backend& backend, const TextInstance& instance,
                       const SystemOutput& output, const ScoreConfig& config);

struct CorpusScoreOptions {
  std::string metric_name = "genscore";
  std::size_t workers = 1;
  bool skip_errors = false;
};

// One score per (instance, system) in corpus order. Results do not depend
// on the worker count.
MetricScoreTable score_corpus(const Backend& backend, const Corpus& corpus,
                              const ScoreConfig& config,
                              const CorpusScoreOptions& options = {});

}  // namespace genscore

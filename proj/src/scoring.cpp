#include "genscore/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "genscore/digest.hpp"
#include "genscore/errors.hpp"
#include "genscore/prompt_ensemble.hpp"
#include "parallel.hpp"

namespace genscore {

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::kFaithfulness: return "faithfulness";
    case Direction::kPrecision: return "precision";
    case Direction::kRecall: return "recall";
    case Direction::kFScore: return "f";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view name) {
  for (auto d : {Direction::kFaithfulness, Direction::kPrecision, Direction::kRecall,
                 Direction::kFScore}) {
    if (direction_name(d) == name) return d;
  }
  return std::nullopt;
}

double idf_weight(std::int64_t df, std::int64_t documents) {
  if (documents < 1) throw UsageError("idf: document count must be >= 1");
  if (df < 0 || df > documents) {
    throw UsageError("idf: document frequency " + std::to_string(df) +
                     " outside [0, " + std::to_string(documents) + "]");
  }
  return std::log((1.0 + static_cast<double>(documents)) / (1.0 + static_cast<double>(df))) +
         1.0;
}

std::vector<double> target_prior_weights(std::span<const std::string> tokens) {
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  std::vector<double> w;
  w.reserve(tokens.size());
  const double m = static_cast<double>(tokens.size());
  for (const auto& t : tokens) w.push_back(static_cast<double>(counts[t]) / m);
  return w;
}

std::vector<double> token_weights(const WeightScheme& scheme,
                                  std::span<const std::string> tokens) {
  struct Visitor {
    std::span<const std::string> tokens;

    std::vector<double> operator()(const UniformWeights&) const {
      return std::vector<double>(tokens.size(), 1.0);
    }
    std::vector<double> operator()(const NoStopWeights& s) const {
      std::vector<double> w;
      w.reserve(tokens.size());
      for (const auto& t : tokens) w.push_back(s.stopwords.count(t) ? 0.0 : 1.0);
      return w;
    }
    std::vector<double> operator()(const IdfWeights& s) const {
      std::vector<double> w;
      w.reserve(tokens.size());
      for (const auto& t : tokens) {
        auto it = s.document_frequency.find(t);
        w.push_back(idf_weight(it == s.document_frequency.end() ? 0 : it->second, s.documents));
      }
      return w;
    }
    std::vector<double> operator()(const TargetPriorWeights&) const {
      return target_prior_weights(tokens);
    }
  };
  return std::visit(Visitor{tokens}, scheme);
}

double weighted_score(std::span<const double> logprobs, std::span<const double> weights,
                      Aggregation aggregation) {
  if (logprobs.size() != weights.size()) {
    throw UsageError("weighted_score: " + std::to_string(logprobs.size()) +
                     " log-probabilities but " + std::to_string(weights.size()) + " weights");
  }
  double sum = 0.0;
  double weight_sum = 0.0;
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    sum += weights[t] * logprobs[t];
    weight_sum += weights[t];
  }
  if (aggregation == Aggregation::kSum) return sum;
  if (weight_sum == 0.0) {
    throw UsageError("weighted_score: every token has weight 0 (degenerate weighting "
                     "under mean aggregation)");
  }
  return sum / weight_sum;
}

double weighted_score(const ScoredSequence& seq, const WeightScheme& scheme,
                      Aggregation aggregation, const std::vector<bool>& mask) {
  auto weights = token_weights(scheme, seq.tokens);
  if (!mask.empty()) {
    if (mask.size() != weights.size()) throw UsageError("weighted_score: mask length mismatch");
    for (std::size_t t = 0; t < weights.size(); ++t) {
      if (!mask[t]) weights[t] = 0.0;
    }
  }
  if (aggregation == Aggregation::kMean &&
      std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    static constexpr const char* kNames[] = {"uniform", "nostop (stopword)", "idf", "prior"};
    throw UsageError(std::string("weighted_score: the ") + kNames[scheme.index()] +
                     " weighting gives every scored token weight 0" +
                     (mask.empty() ? "" : " after prompt masking"));
  }
  return weighted_score(seq.logprobs, weights, aggregation);
}

IdfWeights build_idf(const Backend& backend, std::span<const std::string> documents) {
  IdfWeights idf;
  idf.documents = static_cast<std::int64_t>(std::max<std::size_t>(1, documents.size()));
  for (const auto& doc : documents) {
    auto tokens = backend.tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++idf.document_frequency[std::move(t)];
  }
  return idf;
}

const std::set<std::string, std::less<>>& default_stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "a",     "about", "above", "after", "again", "against", "all",   "am",    "an",
      "and",   "any",   "are",   "as",    "at",    "be",      "been",  "before", "being",
      "below", "between", "both", "but",  "by",    "can",     "did",   "do",    "does",
      "doing", "down",  "during", "each", "few",   "for",     "from",  "further", "had",
      "has",   "have",  "having", "he",   "her",   "here",    "hers",  "him",   "his",
      "how",   "i",     "if",    "in",    "into",  "is",      "it",    "its",   "itself",
      "just",  "me",    "more",  "most",  "my",    "no",      "nor",   "not",   "now",
      "of",    "off",   "on",    "once",  "only",  "or",      "other", "our",   "ours",
      "out",   "over",  "own",   "same",  "she",   "should",  "so",    "some",  "such",
      "than",  "that",  "the",   "their", "theirs", "them",   "then",  "there", "these",
      "they",  "this",  "those", "through", "to",  "too",     "under", "until", "up",
      "very",  "was",   "we",    "were",  "what",  "when",    "where", "which", "while",
      "who",   "whom",  "why",   "will",  "with",  "you",     "your",  "yours"};
  return words;
}

NoStopWeights load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  NoStopWeights w;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : whitespace_tokenize(line)) {
      if (t.front() == '#') break;
      w.stopwords.insert(std::move(t));
    }
  }
  return w;
}

namespace {

nlohmann::ordered_json weights_json(const WeightScheme& scheme) {
  using nlohmann::ordered_json;
  struct Visitor {
    ordered_json operator()(const UniformWeights&) const { return {{"scheme", "uniform"}}; }
    ordered_json operator()(const NoStopWeights& s) const {
      ordered_json j;
      j["scheme"] = "nostop";
      j["stopwords"] = std::vector<std::string>(s.stopwords.begin(), s.stopwords.end());
      return j;
    }
    ordered_json operator()(const IdfWeights& s) const {
      std::string table;
      for (const auto& [tok, df] : s.document_frequency) {
        table += tok;
        table += '\t';
        table += std::to_string(df);
        table += '\n';
      }
      ordered_json j;
      j["scheme"] = "idf";
      j["documents"] = s.documents;
      j["df_sha256"] = sha256_hex(table);
      return j;
    }
    ordered_json operator()(const TargetPriorWeights&) const { return {{"scheme", "prior"}}; }
  };
  return std::visit(Visitor{}, scheme);
}

nlohmann::ordered_json prompt_json(const std::optional<PromptApplication>& app) {
  if (!app) return nullptr;
  nlohmann::ordered_json j;
  if (const auto* single = std::get_if<std::string>(&app->prompt)) {
    j["kind"] = "single";
    j["text"] = *single;
  } else {
    const auto& set = std::get<PromptSet>(app->prompt);
    j["kind"] = "ensemble";
    j["set"] = set.name;
    j["prompts"] = set.prompts;
  }
  j["position"] =
      app->position == PromptPosition::kSourceAppend ? "source-append" : "target-prepend";
  j["score_prompt_tokens"] = app->score_prompt_tokens;
  return j;
}

double aggregate_refs(const std::vector<double>& values, MultiRefAggregation agg) {
  double max = *std::max_element(values.begin(), values.end());
  if (agg == MultiRefAggregation::kMax) return max;
  double sum = 0.0;
  for (double v : values) sum += v;
  // (a+a+a)/3 can round one ulp above a.
  return std::min(max, sum / static_cast<double>(values.size()));
}

template <class E>
[[noreturn]] void rethrow_as(const E& e, const std::string& context) {
  throw E(context + e.what());
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ProtocolError& e) {
    rethrow_as(e, context);
  } catch (const BackendError& e) {
    rethrow_as(e, context);
  } catch (const DataError& e) {
    rethrow_as(e, context);
  } catch (const UsageError& e) {
    rethrow_as(e, context);
  } catch (const std::exception& e) {
    throw Error(context + e.what());
  }
}

}  // namespace

nlohmann::ordered_json config_to_json(const ScoreConfig& config,
                                      const BackendDescriptor& backend) {
  nlohmann::ordered_json j;
  j["direction"] = direction_name(config.direction);
  j["weights"] = weights_json(config.weights);
  j["aggregation"] = config.aggregation == Aggregation::kMean ? "mean" : "sum";
  j["multi_ref"] = config.multi_ref == MultiRefAggregation::kMax ? "max" : "mean";
  j["prompt"] = prompt_json(config.prompt);
  nlohmann::ordered_json b;
  b["name"] = backend.name;
  b["kind"] = backend_kind_name(backend.kind);
  b["tokenizer_id"] = backend.tokenizer_id;
  j["backend"] = std::move(b);
  return j;
}

std::string config_digest(const ScoreConfig& config, const BackendDescriptor& backend) {
  return "sha256:" + sha256_hex(config_to_json(config, backend).dump());
}

double score_pair(const Backend& backend, std::string_view source, std::string_view target,
                  const ScoreConfig& config) {
  if (!config.prompt) {
    return weighted_score(backend.token_log_probs(source, target), config.weights,
                          config.aggregation);
  }
  const auto& app = *config.prompt;
  if (const auto* set = std::get_if<PromptSet>(&app.prompt)) {
    return ensemble_score(backend, source, target, *set, config);
  }
  auto prompted = apply_prompt(backend, source, target, std::get<std::string>(app.prompt),
                               app.position, app.score_prompt_tokens);
  auto seq = backend.token_log_probs(prompted.source, prompted.target);
  return weighted_score(seq, config.weights, config.aggregation, prompted.mask(seq.size()));
}

double score_direction(const Backend& backend, const TextInstance& instance,
                       const SystemOutput& output, const ScoreConfig& config) {
  if (config.direction == Direction::kFaithfulness) {
    return score_pair(backend, instance.source, output.hypothesis, config);
  }
  if (instance.references.empty()) {
    throw DataError("instance '" + instance.instance_id + "' has no references for the " +
                    std::string(direction_name(config.direction)) + " direction");
  }
  auto precision = [&] {
    std::vector<double> v;
    for (const auto& ref : instance.references) {
      v.push_back(score_pair(backend, ref, output.hypothesis, config));
    }
    return aggregate_refs(v, config.multi_ref);
  };
  auto recall = [&] {
    std::vector<double> v;
    for (const auto& ref : instance.references) {
      v.push_back(score_pair(backend, output.hypothesis, ref, config));
    }
    return aggregate_refs(v, config.multi_ref);
  };
  switch (config.direction) {
    case Direction::kPrecision: return precision();
    case Direction::kRecall: return recall();
    default: return (precision() + recall()) / 2.0;
  }
}

MetricScoreTable score_corpus(const Backend& backend, const Corpus& corpus,
                              const ScoreConfig& config, const CorpusScoreOptions& options) {
  struct Job {
    const TextInstance* instance;
    const SystemOutput* output;
  };
  std::vector<Job> jobs;
  for (const auto& inst : corpus.instances()) {
    for (const auto& out : inst.outputs) jobs.push_back({&inst, &out});
  }
  std::vector<std::optional<double>> results(jobs.size());
  detail::parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      results[i] = score_direction(backend, *job.instance, *job.output, config);
    } catch (...) {
      if (options.skip_errors) return;
      rethrow_with_context("(" + job.instance->instance_id + ", " + job.output->system_id +
                           "): ");
    }
  });
  MetricScoreTable table(options.metric_name, config_digest(config, backend.descriptor()));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      table.insert({jobs[i].instance->instance_id, jobs[i].output->system_id}, *results[i]);
    }
  }
  return table;
}

}  // namespace genscore

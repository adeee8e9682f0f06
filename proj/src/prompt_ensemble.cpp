#include "genscore/prompt_ensemble.hpp"

#include <algorithm>

#include "genscore/errors.hpp"

namespace genscore {

double ensemble_score(const Backend& backend, std::string_view source, std::string_view target,
                      const PromptSet& prompts, const ScoreConfig& config) {
  if (prompts.prompts.empty()) throw UsageError("ensemble: prompt set '" + prompts.name + "' is empty");
  if (config.aggregation != Aggregation::kMean) {
    throw UsageError("ensemble: prompt ensembling averages per-prompt means; use mean aggregation");
  }
  PromptPosition position = PromptPosition::kTargetPrepend;
  bool score_prompt_tokens = true;
  if (config.prompt) {
    position = config.prompt->position;
    score_prompt_tokens = config.prompt->score_prompt_tokens;
  }
  double sum = 0.0;
  for (const auto& prompt : prompts.prompts) {
    auto prompted = apply_prompt(backend, source, target, prompt, position, score_prompt_tokens);
    auto seq = backend.token_log_probs(prompted.source, prompted.target);
    sum += weighted_score(seq, config.weights, config.aggregation, prompted.mask(seq.size()));
  }
  return sum / static_cast<double>(prompts.prompts.size());
}

std::vector<PromptRanking> prompt_search(const Backend& backend, const Corpus& dev,
                                         const PromptSet& prompts,
                                         const ScoreConfig& base_config,
                                         const AgreementSpec& spec, std::size_t workers) {
  if (dev.empty()) throw DataError("prompt search: development corpus is empty");
  if (prompts.prompts.empty()) throw DataError("prompt search: prompt set is empty");
  if (is_preference_measure(spec.measure) && spec.preferences.empty()) {
    throw UsageError("prompt search: " + std::string(measure_name(spec.measure)) +
                     " needs preference pairs");
  }
  if (!is_preference_measure(spec.measure) && !spec.perspective) {
    throw UsageError("prompt search: " + std::string(measure_name(spec.measure)) +
                     " needs a judgment perspective");
  }

  std::vector<PromptRanking> ranking;
  for (const auto& prompt : prompts.prompts) {
    ScoreConfig config = base_config;
    PromptApplication app;
    if (base_config.prompt) app = *base_config.prompt;
    app.prompt = prompt;
    config.prompt = std::move(app);
    CorpusScoreOptions options;
    options.metric_name = "prompt:" + prompt;
    options.workers = workers;
    auto table = score_corpus(backend, dev, config, options);
    ranking.push_back({prompt, evaluate_agreement(dev, table, spec).value});
  }
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.prompt < b.prompt;
  });
  return ranking;
}

}  // namespace genscore

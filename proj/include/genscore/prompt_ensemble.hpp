#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "genscore/backend.hpp"
#include "genscore/metaeval.hpp"
#include "genscore/prompting.hpp"
#include "genscore/scoring.hpp"

namespace genscore {

// Mean over prompts of the per-prompt length-normalized score. Position and
// prompt-token scoring come from config.prompt when present (default:
// TargetPrepend, prompt tokens scored). Requires Aggregation::kMean.
double ensemble_score(const Backend& backend, std::string_view source,
                      std::string_view target, const PromptSet& prompts,
                      const ScoreConfig& config);

struct PromptRanking {
  std::string prompt;
  double value;
};

// Scores `dev` once per prompt and ranks the prompts by agreement with the
// human judgments, best first; ties fall back to lexicographic prompt order.
std::vector<PromptRanking> prompt_search(const Backend& backend, const Corpus& dev,
                                         const PromptSet& prompts,
                                         const ScoreConfig& base_config,
                                         const AgreementSpec& spec,
                                         std::size_t workers = 1);

}  // namespace genscore

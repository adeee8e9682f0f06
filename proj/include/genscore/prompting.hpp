#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "genscore/backend.hpp"

namespace genscore {

enum class PromptUsage { kSourceToHyp, kHypRefBidirectional };

struct PromptSet {
  std::string name;
  PromptUsage usage = PromptUsage::kSourceToHyp;
  std::vector<std::string> prompts;

  // Throws DataError on empty prompts or case-folded duplicates.
  void validate() const;
  bool contains(std::string_view prompt) const;  // case-insensitive
};

// Built-in sets: "s2h" (70 prompts) and "h2r" (34 prompts).
const std::vector<PromptSet>& builtin_prompt_sets();
const PromptSet* find_builtin_prompt_set(std::string_view name);

// One prompt per line; blank lines and lines starting with '#' are skipped.
PromptSet load_prompt_set(const std::filesystem::path& path,
                          PromptUsage usage = PromptUsage::kSourceToHyp);

enum class PromptPosition { kSourceAppend, kTargetPrepend };

struct PromptApplication {
  // A single prompt, or ensemble over every prompt in a set.
  std::variant<std::string, PromptSet> prompt;
  PromptPosition position = PromptPosition::kTargetPrepend;
  bool score_prompt_tokens = true;
};

struct PromptedPair {
  std::string source;
  std::string target;
  // Number of leading target tokens contributed by the prompt.
  std::size_t prompt_tokens = 0;
  bool score_prompt_tokens = true;

  // Mask over a scored sequence of `length` tokens (EOS included).
  std::vector<bool> mask(std::size_t length) const;
};

// x' = x + " " + z (SourceAppend) or y' = z + " " + y (TargetPrepend). An
// empty prompt returns the inputs unchanged.
PromptedPair apply_prompt(const Backend& backend, std::string_view source,
                          std::string_view target, std::string_view prompt,
                          PromptPosition position, bool score_prompt_tokens = true);

}  // namespace genscore

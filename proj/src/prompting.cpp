#include "genscore/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "genscore/errors.hpp"

namespace genscore {
namespace {

std::string case_fold(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Source-to-hypothesis prompts, row by row as published (14 rows x 5).
const char* const kSourceToHypPrompts[] = {
    "Last", "Tersely", "Succinctly", "In summation", "To put it succinctly",
    "After", "In brief", "All in all", "To summarize", "Bringing up the rear",
    "Behind", "In short", "In outline", "In a nutshell", "To come to the point",
    "Lastly", "Concisely", "In closing", "In conclusion", "In the final analysis",
    "In sum", "In precis", "In passing", "In winding up", "Without wasting words",
    "To end", "In a word", "To conclude", "Last in order", "At the end of the day",
    "Curtly", "Compactly", "Summarising", "In a few words", "Without waste of words",
    "Crisply", "Summarily", "In the rear", "As a final point", "Finally yet importantly",
    "At last", "To sum up", "Summarizing", "Not least of all", "To put it in a nutshell",
    "Pithily", "Basically", "Laconically", "To put it briefly", "When all is said and done",
    "Shortly", "In the end", "At the rear", "Not to mince words", "To cut a long story short",
    "In fine", "At the end", "To be brief", "Last but not least", "Not to beat about the bush",
    "Finally", "In essence", "Last of all", "Just as importantly", "In drawing things to a close",
    "Briefly", "Ultimately", "Elliptically", "To put it concisely", "Not to put too fine a point on it",
};

// Hypothesis/reference prompts (7 rows x 5, last cell empty).
const char* const kHypRefPrompts[] = {
    "As", "To wit", "As it were", "Case in point", "As an illustration",
    "sc.", "That is", "Especially", "That is to say", "To give an example",
    "i.e.", "Such as", "For example", "To rephrase it", "To give an instance",
    "Like", "Scilicet", "Particularly", "To be specific", "To put it another way",
    "Viz.", "Videlicet", "Specifically", "In plain English", "By way of explanation",
    "Namely", "Expressly", "For instance", "Take for example", "By way of illustration",
    "id est", "Specially", "To illustrate", "Strictly speaking",
};

}  // namespace

void PromptSet::validate() const {
  std::set<std::string> folded;
  for (const auto& p : prompts) {
    if (trim(p).empty()) throw DataError("prompt set '" + name + "' contains an empty prompt");
    if (!folded.insert(case_fold(p)).second) {
      throw DataError("prompt set '" + name + "' repeats prompt '" + p + "'");
    }
  }
}

bool PromptSet::contains(std::string_view prompt) const {
  auto needle = case_fold(prompt);
  return std::any_of(prompts.begin(), prompts.end(),
                     [&](const std::string& p) { return case_fold(p) == needle; });
}

const std::vector<PromptSet>& builtin_prompt_sets() {
  static const std::vector<PromptSet> sets = [] {
    std::vector<PromptSet> out;
    out.push_back({"s2h", PromptUsage::kSourceToHyp,
                   {std::begin(kSourceToHypPrompts), std::end(kSourceToHypPrompts)}});
    out.push_back({"h2r", PromptUsage::kHypRefBidirectional,
                   {std::begin(kHypRefPrompts), std::end(kHypRefPrompts)}});
    for (const auto& s : out) s.validate();
    return out;
  }();
  return sets;
}

const PromptSet* find_builtin_prompt_set(std::string_view name) {
  for (const auto& s : builtin_prompt_sets()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

PromptSet load_prompt_set(const std::filesystem::path& path, PromptUsage usage) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  PromptSet set{path.stem().string(), usage, {}};
  std::string line;
  while (std::getline(in, line)) {
    std::string p = trim(line);
    if (p.empty() || p.front() == '#') continue;
    set.prompts.push_back(std::move(p));
  }
  if (set.prompts.empty()) throw DataError("prompt file '" + path.string() + "' is empty");
  set.validate();
  return set;
}

std::vector<bool> PromptedPair::mask(std::size_t length) const {
  std::vector<bool> m(length, true);
  if (!score_prompt_tokens) {
    for (std::size_t i = 0; i < std::min(prompt_tokens, length); ++i) m[i] = false;
  }
  return m;
}

PromptedPair apply_prompt(const Backend& backend, std::string_view source,
                          std::string_view target, std::string_view prompt,
                          PromptPosition position, bool score_prompt_tokens) {
  PromptedPair out{std::string(source), std::string(target), 0, score_prompt_tokens};
  if (prompt.empty()) return out;
  if (position == PromptPosition::kSourceAppend) {
    out.source += ' ';
    out.source += prompt;
  } else {
    out.target = std::string(prompt) + ' ' + std::string(target);
    out.prompt_tokens = backend.tokenize(prompt).size();
  }
  return out;
}

}  // namespace genscore

#include "genscore/backend.hpp"

#include <cctype>

#include "genscore/errors.hpp"

namespace genscore {

double clamp_logprob(double logprob, bool* raised_from_positive) {
  if (raised_from_positive) *raised_from_positive = false;
  if (logprob > 0.0) {
    if (raised_from_positive) *raised_from_positive = true;
    return 0.0;
  }
  if (logprob < kLogProbFloor) return kLogProbFloor;
  return logprob;
}

double ScoredSequence::total_logprob() const {
  double sum = 0.0;
  for (double lp : logprobs) sum += lp;
  return sum;
}

void ScoredSequence::validate() const {
  if (tokens.size() != logprobs.size()) {
    throw ProtocolError("scored sequence has " + std::to_string(tokens.size()) +
                        " tokens but " + std::to_string(logprobs.size()) +
                        " log-probabilities");
  }
  if (tokens.empty()) throw ProtocolError("scored sequence is empty");
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    if (!std::isfinite(logprobs[i]) || logprobs[i] > 0.0) {
      throw ProtocolError("invalid log-probability at position " + std::to_string(i));
    }
  }
}

std::string_view backend_kind_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::kTable: return "table";
    case BackendKind::kCopyNgram: return "copy-ngram";
    case BackendKind::kExternal: return "external";
  }
  return "?";
}

std::vector<std::string> whitespace_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace genscore

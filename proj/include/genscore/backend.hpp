#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace genscore {

inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kBos = "<s>";

// Per-token log-probabilities are clamped to [ln(1e-12), 0].
inline const double kLogProbFloor = std::log(1e-12);

// Clamps a log-probability into [kLogProbFloor, 0]. Returns true through
// `raised_from_positive` when a positive value had to be lowered to 0.
double clamp_logprob(double logprob, bool* raised_from_positive = nullptr);

// Target tokens (EOS last) with log p(y_t | y_<t, x).
struct ScoredSequence {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;

  std::size_t size() const { return tokens.size(); }
  double total_logprob() const;

  // Throws ProtocolError when lengths differ, the sequence is empty, or a
  // value is non-finite or positive.
  void validate() const;

  bool operator==(const ScoredSequence&) const = default;
};

enum class BackendKind { kTable, kCopyNgram, kExternal };

std::string_view backend_kind_name(BackendKind kind);

struct BackendDescriptor {
  std::string name;
  BackendKind kind;
  // Identifies the tokenization so that weight statistics line up.
  std::string tokenizer_id;
};

// Conditional log-probability provider. Implementations must be safe to call
// concurrently from several threads.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendDescriptor descriptor() const = 0;

  // Deterministic; never includes EOS.
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;

  // Scores tokenize(target) + EOS conditioned on `source`.
  virtual ScoredSequence token_log_probs(std::string_view source,
                                         std::string_view target) const = 0;
};

// Splits on ASCII whitespace, dropping empty runs.
std::vector<std::string> whitespace_tokenize(std::string_view text);

inline constexpr std::string_view kWhitespaceTokenizerId = "whitespace-v1";

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ");

}  // namespace genscore

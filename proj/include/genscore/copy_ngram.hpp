#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "genscore/backend.hpp"

namespace genscore {

struct CopyNgramParams {
  double alpha = 0.1;          // additive smoothing constant, > 0
  double lambda_copy = 0.5;
  double lambda_bigram = 0.3;
  double lambda_unigram = 0.2;
};

using ParallelCorpus = std::vector<std::pair<std::string, std::string>>;

// Reads {"source": ..., "target": ...} lines.
ParallelCorpus load_parallel_corpus(const std::filesystem::path& path);

// Interpolated copy / bigram / unigram model over whitespace tokens:
//
//   p(y_t | y_{t-1}, x) = l_copy * P_copy(y_t | x)
//                       + l_bi   * P_bi(y_t | y_{t-1})
//                       + l_uni  * P_uni(y_t)
//
// with P_copy(t | x) = (c_x(t) + a) / (|x| + a|V|) and additively smoothed
// bigram/unigram estimates over the training targets (EOS appended). Tokens
// outside V, on either side, are read as UNK.
class CopyNgramModel final : public Backend {
 public:
  // Throws UsageError on an empty corpus, alpha <= 0, or lambdas that are
  // negative or do not sum to 1 within 1e-12.
  static CopyNgramModel train(std::span<const std::pair<std::string, std::string>> corpus,
                              const CopyNgramParams& params = {});

  BackendDescriptor descriptor() const override;
  std::vector<std::string> tokenize(std::string_view text) const override;
  ScoredSequence token_log_probs(std::string_view source,
                                 std::string_view target) const override;

  // Component and mixture probabilities. `previous` may be kBos.
  double copy_probability(std::string_view token,
                          std::span<const std::string> source_tokens) const;
  double bigram_probability(std::string_view previous, std::string_view token) const;
  double unigram_probability(std::string_view token) const;
  double probability(std::string_view token, std::string_view previous,
                     std::span<const std::string> source_tokens) const;

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const CopyNgramParams& params() const { return params_; }

 private:
  using TokenId = std::uint32_t;

  CopyNgramModel() = default;

  TokenId id_of(std::string_view token) const;  // UNK when unknown
  TokenId context_id_of(std::string_view previous) const;  // BOS handled
  std::vector<std::uint32_t> source_counts(std::span<const std::string> source_tokens) const;
  double mix(TokenId token, TokenId context, const std::vector<std::uint32_t>& counts,
             std::size_t source_len) const;

  static std::uint64_t pair_key(TokenId prev, TokenId next) {
    return (static_cast<std::uint64_t>(prev) << 32) | next;
  }

  CopyNgramParams params_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId eos_ = 0;
  TokenId unk_ = 0;
  TokenId bos_context_ = 0;  // == vocab_.size(); BOS is a context only

  std::vector<std::uint64_t> unigram_counts_;
  std::uint64_t unigram_total_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_counts_;
  std::vector<std::uint64_t> context_totals_;  // indexed by context id
};

}  // namespace genscore

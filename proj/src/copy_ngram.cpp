#include "genscore/copy_ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "genscore/errors.hpp"

namespace genscore {

ParallelCorpus load_parallel_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  ParallelCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      corpus.emplace_back(j.at("source").get<std::string>(),
                          j.at("target").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

CopyNgramModel CopyNgramModel::train(
    std::span<const std::pair<std::string, std::string>> corpus,
    const CopyNgramParams& params) {
  if (corpus.empty()) throw UsageError("copy-ngram: training corpus is empty");
  if (!(params.alpha > 0.0)) throw UsageError("copy-ngram: alpha must be > 0");
  if (params.lambda_copy < 0 || params.lambda_bigram < 0 || params.lambda_unigram < 0) {
    throw UsageError("copy-ngram: interpolation weights must be non-negative");
  }
  double lambda_sum = params.lambda_copy + params.lambda_bigram + params.lambda_unigram;
  if (std::abs(lambda_sum - 1.0) > 1e-12) {
    throw UsageError("copy-ngram: interpolation weights sum to " +
                     std::to_string(lambda_sum) + ", expected 1");
  }

  CopyNgramModel model;
  model.params_ = params;

  std::vector<std::vector<std::string>> targets;
  std::set<std::string> seen;
  for (const auto& [source, target] : corpus) {
    for (auto& t : whitespace_tokenize(source)) seen.insert(std::move(t));
    targets.push_back(whitespace_tokenize(target));
    seen.insert(targets.back().begin(), targets.back().end());
  }
  seen.erase(std::string(kEos));
  seen.erase(std::string(kUnk));
  seen.erase(std::string(kBos));

  model.vocab_.assign(seen.begin(), seen.end());
  model.vocab_.emplace_back(kEos);
  model.vocab_.emplace_back(kUnk);
  for (TokenId i = 0; i < model.vocab_.size(); ++i) model.index_.emplace(model.vocab_[i], i);
  model.eos_ = model.index_.at(std::string(kEos));
  model.unk_ = model.index_.at(std::string(kUnk));
  model.bos_context_ = static_cast<TokenId>(model.vocab_.size());

  model.unigram_counts_.assign(model.vocab_.size(), 0);
  model.context_totals_.assign(model.vocab_.size() + 1, 0);
  for (const auto& target : targets) {
    TokenId prev = model.bos_context_;
    auto count = [&](TokenId next) {
      ++model.unigram_counts_[next];
      ++model.unigram_total_;
      ++model.bigram_counts_[pair_key(prev, next)];
      ++model.context_totals_[prev];
      prev = next;
    };
    for (const auto& tok : target) count(model.id_of(tok));
    count(model.eos_);
  }
  return model;
}

CopyNgramModel::TokenId CopyNgramModel::id_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

CopyNgramModel::TokenId CopyNgramModel::context_id_of(std::string_view previous) const {
  return previous == kBos ? bos_context_ : id_of(previous);
}

std::vector<std::uint32_t> CopyNgramModel::source_counts(
    std::span<const std::string> source_tokens) const {
  std::vector<std::uint32_t> counts(vocab_.size(), 0);
  for (const auto& t : source_tokens) ++counts[id_of(t)];
  return counts;
}

double CopyNgramModel::mix(TokenId token, TokenId context,
                           const std::vector<std::uint32_t>& counts,
                           std::size_t source_len) const {
  const double a = params_.alpha;
  const double v = static_cast<double>(vocab_.size());
  double p_copy = (counts[token] + a) / (static_cast<double>(source_len) + a * v);
  double p_uni = (static_cast<double>(unigram_counts_[token]) + a) /
                 (static_cast<double>(unigram_total_) + a * v);
  std::uint64_t bigram = 0;
  if (auto it = bigram_counts_.find(pair_key(context, token)); it != bigram_counts_.end()) {
    bigram = it->second;
  }
  double p_bi = (static_cast<double>(bigram) + a) /
                (static_cast<double>(context_totals_[context]) + a * v);
  return params_.lambda_copy * p_copy + params_.lambda_bigram * p_bi +
         params_.lambda_unigram * p_uni;
}

double CopyNgramModel::copy_probability(std::string_view token,
                                        std::span<const std::string> source_tokens) const {
  auto counts = source_counts(source_tokens);
  const double a = params_.alpha;
  return (counts[id_of(token)] + a) /
         (static_cast<double>(source_tokens.size()) + a * static_cast<double>(vocab_.size()));
}

double CopyNgramModel::bigram_probability(std::string_view previous,
                                          std::string_view token) const {
  TokenId ctx = context_id_of(previous);
  std::uint64_t bigram = 0;
  if (auto it = bigram_counts_.find(pair_key(ctx, id_of(token))); it != bigram_counts_.end()) {
    bigram = it->second;
  }
  const double a = params_.alpha;
  return (static_cast<double>(bigram) + a) /
         (static_cast<double>(context_totals_[ctx]) + a * static_cast<double>(vocab_.size()));
}

double CopyNgramModel::unigram_probability(std::string_view token) const {
  const double a = params_.alpha;
  return (static_cast<double>(unigram_counts_[id_of(token)]) + a) /
         (static_cast<double>(unigram_total_) + a * static_cast<double>(vocab_.size()));
}

double CopyNgramModel::probability(std::string_view token, std::string_view previous,
                                   std::span<const std::string> source_tokens) const {
  return mix(id_of(token), context_id_of(previous), source_counts(source_tokens),
             source_tokens.size());
}

BackendDescriptor CopyNgramModel::descriptor() const {
  return {"copy-ngram", BackendKind::kCopyNgram, std::string(kWhitespaceTokenizerId)};
}

std::vector<std::string> CopyNgramModel::tokenize(std::string_view text) const {
  return whitespace_tokenize(text);
}

ScoredSequence CopyNgramModel::token_log_probs(std::string_view source,
                                               std::string_view target) const {
  auto source_tokens = whitespace_tokenize(source);
  auto counts = source_counts(source_tokens);
  ScoredSequence seq;
  seq.tokens = tokenize(target);
  seq.tokens.emplace_back(kEos);
  seq.logprobs.reserve(seq.tokens.size());
  TokenId prev = bos_context_;
  for (const auto& tok : seq.tokens) {
    TokenId id = id_of(tok);
    seq.logprobs.push_back(clamp_logprob(std::log(mix(id, prev, counts, source_tokens.size()))));
    prev = id;
  }
  return seq;
}

}  // namespace genscore

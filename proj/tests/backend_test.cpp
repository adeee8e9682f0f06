#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "genscore/backend.hpp"
#include "genscore/copy_ngram.hpp"
#include "genscore/errors.hpp"
#include "genscore/table_backend.hpp"
#include "oracles.hpp"

namespace genscore {
namespace {

const std::string kFixtureDir = GENSCORE_FIXTURE_DIR;

TEST(Tokenize, Whitespace) {
  EXPECT_EQ(whitespace_tokenize("a b"), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(whitespace_tokenize("").empty());
  EXPECT_EQ(whitespace_tokenize("  a   b "), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(whitespace_tokenize("a\tb\nc"), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(ClampLogprob, FloorAndCeiling) {
  bool raised = false;
  EXPECT_EQ(clamp_logprob(0.5, &raised), 0.0);
  EXPECT_TRUE(raised);
  EXPECT_EQ(clamp_logprob(-1000.0, &raised), kLogProbFloor);
  EXPECT_FALSE(raised);
  EXPECT_EQ(clamp_logprob(-1.0), -1.0);
  EXPECT_NEAR(kLogProbFloor, -27.631021115928547, 1e-12);
}

TableDefinition simple_definition() {
  TableDefinition def;
  def.vocabulary = {"a", "b"};
  def.entries.push_back({"x", {}, {{"a", 0.5}, {"b", 0.25}, {"</s>", 0.25}}});
  def.entries.push_back({"x", {"a"}, {{"</s>", 0.25}, {"a", 0.75}}});
  return def;
}

TEST(TableBackend, TwoTokenFixture) {
  TableBackend backend(simple_definition());
  auto seq = backend.token_log_probs("x", "a");
  ASSERT_EQ(seq.tokens, (std::vector<std::string>{"a", "</s>"}));
  EXPECT_NEAR(seq.logprobs[0], -0.693147, 1e-6);
  EXPECT_NEAR(seq.logprobs[1], -1.386294, 1e-6);
  EXPECT_EQ(seq.logprobs[0], std::log(0.5));
  EXPECT_EQ(seq.logprobs[1], std::log(0.25));
}

TEST(TableBackend, EmptyTargetScoresEosOnly) {
  TableBackend backend(simple_definition());
  auto seq = backend.token_log_probs("x", "");
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq.tokens[0], "</s>");
  EXPECT_EQ(seq.logprobs[0], std::log(0.25));
}

TEST(TableBackend, TokenOutsideVocabulary) {
  TableBackend backend(simple_definition());
  EXPECT_THROW(backend.token_log_probs("x", "zebra"), BackendError);
}

TEST(TableBackend, MissingContextIsAnError) {
  TableBackend backend(simple_definition());
  EXPECT_THROW(backend.token_log_probs("y", "a"), BackendError);
}

TEST(TableBackend, ZeroProbabilityIsFloored) {
  auto def = simple_definition();
  def.default_dist = std::map<std::string, double>{{"</s>", 1.0}};
  TableBackend backend(def);
  auto seq = backend.token_log_probs("x", "a b");  // p(b | a) absent -> 0
  EXPECT_EQ(seq.logprobs[1], kLogProbFloor);
}

TEST(TableBackend, RejectsBadDistributions) {
  auto def = simple_definition();
  def.entries[0].dist["a"] = 0.6;
  EXPECT_THROW(TableBackend{def}, DataError);
  def = simple_definition();
  def.entries[0].dist = {{"q", 1.0}};
  EXPECT_THROW(TableBackend{def}, DataError);
  def = simple_definition();
  def.entries.push_back(def.entries[0]);
  EXPECT_THROW(TableBackend{def}, DataError);
}

TEST(TableBackend, SourceMatchIgnoresWhitespaceRuns) {
  TableBackend backend(simple_definition());
  EXPECT_EQ(backend.token_log_probs("  x ", "a"), backend.token_log_probs("x", "a"));
}

// Chain rule vs the linear-scan oracle, and distribution validity, on the
// shipped fixture.
TEST(TableBackend, ChainRuleMatchesOracleOnFixture) {
  auto def = oracle::read_json(kFixtureDir + "/table_backend.json");
  auto backend = TableBackend::load(kFixtureDir + "/table_backend.json");
  for (std::string source : {"x", "a b", "c c", ""}) {
    for (std::string target : {"", "a", "b a", "a b", "c", "a a c", "b a c"}) {
      auto seq = backend.token_log_probs(source, target);
      auto probs = oracle::table_chain(def, source, target);
      ASSERT_EQ(seq.size(), probs.size());
      double product = 1.0, log_sum = 0.0;
      for (double p : probs) {
        p = std::max(p, 1e-12);
        product *= p;
        log_sum += std::log(p);
      }
      EXPECT_EQ(seq.total_logprob(), log_sum) << source << " -> " << target;
      EXPECT_NEAR(std::exp(seq.total_logprob()), product, 1e-12 * product)
          << source << " -> " << target;
    }
  }
  for (const auto& e : def["entries"]) {
    double sum = 0;
    for (const auto& [tok, p] : e["dist"].items()) sum += p.get<double>();
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(TableBackend, Deterministic) {
  auto backend = TableBackend::load(kFixtureDir + "/table_backend.json");
  EXPECT_EQ(backend.token_log_probs("x", "b a"), backend.token_log_probs("x", "b a"));
}

ParallelCorpus toy_corpus() {
  return {{"the cat sat", "cat sat"}, {"a dog ran", "dog ran"}, {"the dog sat", "dog sat"}};
}

TEST(CopyNgram, CopyProbabilityHandArithmetic) {
  ParallelCorpus corpus{{"a", "a"}};
  CopyNgramParams params{0.1, 1.0, 0.0, 0.0};
  auto model = CopyNgramModel::train(corpus, params);
  ASSERT_EQ(model.vocabulary().size(), 3u);  // a, EOS, UNK
  std::vector<std::string> source{"a"};
  // (1 + 0.1) / (1 + 3 * 0.1)
  EXPECT_NEAR(model.copy_probability("a", source), 0.84615384615384615, 1e-15);
  EXPECT_NEAR(model.probability("a", kBos, source), 1.1 / 1.3, 1e-15);
}

TEST(CopyNgram, DistributionsSumToOne) {
  auto model = CopyNgramModel::train(toy_corpus());
  std::vector<std::vector<std::string>> sources = {
      {}, {"the", "cat"}, {"zebra", "zebra", "dog"}, {"cat", "cat", "cat", "sat"}};
  std::vector<std::string> contexts(model.vocabulary());
  contexts.emplace_back(kBos);
  contexts.emplace_back("never-seen");
  for (const auto& src : sources) {
    for (const auto& prev : contexts) {
      double sum = 0.0;
      for (const auto& tok : model.vocabulary()) sum += model.probability(tok, prev, src);
      EXPECT_NEAR(sum, 1.0, 1e-9) << "prev=" << prev;
    }
  }
}

TEST(CopyNgram, ProbabilitiesInUnitInterval) {
  auto model = CopyNgramModel::train(toy_corpus());
  auto seq = model.token_log_probs("the cat", "cat zebra dog sat");
  for (double lp : seq.logprobs) {
    EXPECT_LE(lp, 0.0);
    EXPECT_GT(std::exp(lp), 0.0);
  }
}

TEST(CopyNgram, UnigramOnlyIgnoresSource) {
  auto model = CopyNgramModel::train(toy_corpus(), {0.1, 0.0, 0.0, 1.0});
  EXPECT_EQ(model.token_log_probs("the cat sat", "dog ran"),
            model.token_log_probs("zebra", "dog ran"));
}

TEST(CopyNgram, InvalidHyperparameters) {
  EXPECT_THROW(CopyNgramModel::train({}, {}), UsageError);
  EXPECT_THROW(CopyNgramModel::train(toy_corpus(), {0.1, 0.5, 0.5, 0.1}), UsageError);
  EXPECT_THROW(CopyNgramModel::train(toy_corpus(), {0.0, 0.5, 0.3, 0.2}), UsageError);
  EXPECT_THROW(CopyNgramModel::train(toy_corpus(), {0.1, 1.2, -0.2, 0.0}), UsageError);
}

// Replacing a source token that is not in the target with one that is never
// lowers the target's log-probability.
TEST(CopyNgram, CopySensitivityProperty) {
  auto corpus = load_parallel_corpus(kFixtureDir + "/parallel.jsonl");
  auto model = CopyNgramModel::train(corpus);
  std::mt19937 rng(11);
  const auto& vocab = model.vocabulary();
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 3);  // skip EOS, UNK
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> target, source;
    for (int i = 0; i < 4; ++i) target.push_back(vocab[pick(rng)]);
    for (int i = 0; i < 8; ++i) source.push_back(vocab[pick(rng)]);
    std::string tgt = join_tokens(target);
    double before = model.token_log_probs(join_tokens(source), tgt).total_logprob();
    for (auto& s : source) {
      if (std::find(target.begin(), target.end(), s) == target.end()) {
        s = target[trial % target.size()];
        break;
      }
    }
    double after = model.token_log_probs(join_tokens(source), tgt).total_logprob();
    EXPECT_GE(after, before);
  }
}

}  // namespace
}  // namespace genscore

#include <gtest/gtest.h>

#include <cmath>
#include <bit>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <random>
#include <sstream>

#include "genscore/corpus_io.hpp"
#include "genscore/errors.hpp"
#include "genscore/types.hpp"

namespace genscore {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("genscore_dm_" + std::to_string(::getpid()) + "_" + name);
}

TEST(LoadCorpus, ParsesValidLinesInFileOrder) {
  std::istringstream in(
      R"({"instance_id": "b", "source": "s1", "references": ["r"], "outputs": [{"system_id": "x", "hypothesis": "h", "judgments": {"Info": 1.5, "extra:pyramid": 0.25}}]})"
      "\n\n"
      R"({"instance_id": "a", "source": "s2", "references": [], "outputs": []})"
      "\n");
  Corpus corpus = parse_corpus(in, "mem");
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].instance_id, "b");
  EXPECT_EQ(corpus[1].instance_id, "a");
  const auto& out = corpus[0].outputs.at(0);
  EXPECT_EQ(out.judgment(Perspective::kInfo), 1.5);
  EXPECT_FALSE(out.judgment(Perspective::kFac).has_value());
  EXPECT_EQ(out.extra_judgments.at("pyramid"), 0.25);
  EXPECT_EQ(corpus.index_of("a"), 1u);
}

TEST(LoadCorpus, DuplicateInstanceIdIsNamed) {
  std::istringstream in(
      "{\"instance_id\": \"dup\", \"source\": \"s\"}\n"
      "{\"instance_id\": \"dup\", \"source\": \"t\"}\n");
  try {
    parse_corpus(in, "mem");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos);
  }
}

TEST(LoadCorpus, NanJudgmentIsRejected) {
  std::istringstream in(
      R"({"instance_id": "i", "source": "s", "outputs": [{"system_id": "x", "hypothesis": "h", "judgments": {"Info": "NaN"}}]})");
  EXPECT_THROW(parse_corpus(in), DataError);
}

TEST(LoadCorpus, UnknownPerspectiveIsRejected) {
  std::istringstream in(
      R"({"instance_id": "i", "source": "s", "outputs": [{"system_id": "x", "hypothesis": "h", "judgments": {"Fluency": 1}}]})");
  EXPECT_THROW(parse_corpus(in), DataError);
}

TEST(LoadCorpus, MalformedLineReportsLineNumber) {
  std::istringstream in("{\"instance_id\": \"i\", \"source\": \"s\"}\n{not json\n");
  try {
    parse_corpus(in, "f.jsonl");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:2"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, DuplicateSystemInInstance) {
  std::istringstream in(
      R"({"instance_id": "i", "source": "s", "outputs": [{"system_id": "x", "hypothesis": "h"}, {"system_id": "x", "hypothesis": "g"}]})");
  EXPECT_THROW(parse_corpus(in), DataError);
}

TEST(Preferences, ValidationResolvesAgainstCorpus) {
  TextInstance inst{"i", "s", {}, {{"a", "h1", {}, {}}, {"b", "h2", {}, {}}}};
  Corpus corpus({inst});
  EXPECT_NO_THROW(validate_preferences(corpus, {{"i", "a", "b"}}));
  EXPECT_THROW(validate_preferences(corpus, {{"i", "a", "a"}}), DataError);
  EXPECT_THROW(validate_preferences(corpus, {{"i", "a", "zz"}}), DataError);
  EXPECT_THROW(validate_preferences(corpus, {{"nope", "a", "b"}}), DataError);

  std::istringstream in(R"({"instance_id": "i", "better_id": "a", "worse_id": "a"})");
  EXPECT_THROW(parse_preferences(in), DataError);
}

TEST(ScoreTable, RejectsNonFiniteAndDuplicates) {
  MetricScoreTable t("m", "d");
  t.insert({"i", "s"}, -1.0);
  EXPECT_THROW(t.insert({"i", "s"}, -2.0), DataError);
  EXPECT_THROW(t.insert({"i", "t"}, -INFINITY), DataError);
  EXPECT_THROW(t.insert({"i", "u"}, NAN), DataError);
  EXPECT_EQ(t.find("i", "s"), -1.0);
  EXPECT_FALSE(t.find("i", "t"));
}

TEST(SaveScores, EmptyTableWritesHeaderOnly) {
  MetricScoreTable t("genscore", "sha256:abc");
  auto path = temp_path("empty.jsonl");
  save_scores(t, path);
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(all, "{\"metric_name\":\"genscore\",\"config_digest\":\"sha256:abc\"}\n");
  EXPECT_EQ(load_scores(path), t);
  fs::remove(path);
}

TEST(SaveScores, KnownValueRoundTripsBitForBit) {
  MetricScoreTable t("m", "d");
  t.insert({"i1", "s1"}, -1.0397);
  std::ostringstream out;
  write_scores(out, t);
  EXPECT_NE(out.str().find("-1.0397000000000001"), std::string::npos) << out.str();
  std::istringstream in(out.str());
  auto back = parse_scores(in);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(*back.find("i1", "s1")),
            std::bit_cast<std::uint64_t>(-1.0397));
}

TEST(SaveScores, UnwritablePath) {
  MetricScoreTable t("m", "d");
  EXPECT_THROW(save_scores(t, "/nonexistent-dir/x/scores.jsonl"), DataError);
}

// Property: random tables survive save/load exactly.
TEST(SaveScores, RandomTablesRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(-50.0, 0.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int trial = 0; trial < 50; ++trial) {
    MetricScoreTable t("metric \"quoted\" \xc3\xa9", "digest-" + std::to_string(trial));
    for (int i = 0; i < 40; ++i) {
      double v = trial % 2 ? value(rng) : std::ldexp(value(rng), exponent(rng) / 4);
      t.insert({"inst" + std::to_string(i / 3), "sys\t" + std::to_string(i % 3)}, v);
    }
    std::ostringstream out;
    write_scores(out, t);
    std::istringstream in(out.str());
    ASSERT_EQ(parse_scores(in), t);
  }
}

TEST(SaveCorpus, RoundTrip) {
  SystemOutput a{"a", "h \"1\"", {{Perspective::kInfo, 0.1}, {Perspective::kAde, -3.0}},
                 {{"pyr", 1e-9}}};
  SystemOutput b{"b", "", {}, {}};
  Corpus corpus({TextInstance{"i", "src\nline", {"r1", "r2"}, {a, b}},
                 TextInstance{"j", "", {}, {}}});
  std::ostringstream out;
  write_corpus(out, corpus);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_corpus(in), corpus);
}

}  // namespace
}  // namespace genscore

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "genscore/analysis.hpp"
#include "genscore/backend.hpp"
#include "genscore/errors.hpp"
#include "oracles.hpp"

namespace genscore {
namespace {

AgreementSpec info_spec(Measure m = Measure::kPearson, Grouping g = Grouping::kPooled) {
  AgreementSpec spec;
  spec.measure = m;
  spec.grouping = g;
  spec.perspective = Perspective::kInfo;
  return spec;
}

// 5 systems x 10 instances. System k has human quality k plus a
// per-instance wobble; the metric tracks humans for the strong systems and
// is noisy for the weak ones.
struct FiveSystems {
  Corpus corpus;
  MetricScoreTable scores{"m", "d"};
  std::vector<std::vector<double>> human, metric;  // [system][instance]

  explicit FiveSystems(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise;
    human.assign(5, std::vector<double>(10));
    metric.assign(5, std::vector<double>(10));
    std::vector<TextInstance> instances;
    for (int i = 0; i < 10; ++i) {
      TextInstance inst{"i" + std::to_string(i), "src", {"ref"}, {}};
      for (int s = 0; s < 5; ++s) {
        human[s][i] = s + 0.3 * noise(rng);
        metric[s][i] = human[s][i] + (s < 2 ? 2.0 : 0.2) * noise(rng);
        std::string id = "sys" + std::to_string(s);
        inst.outputs.push_back({id, "h", {{Perspective::kInfo, human[s][i]}}, {}});
        scores.insert({inst.instance_id, id}, metric[s][i]);
      }
      instances.push_back(std::move(inst));
    }
    corpus = Corpus(std::move(instances));
  }

  // Pooled Pearson over the k systems with the highest human mean.
  double oracle_topk(std::size_t k) const {
    std::vector<std::pair<double, int>> means;
    for (int s = 0; s < 5; ++s) {
      double m = 0;
      for (double v : human[s]) m += v;
      means.push_back({-m / 10, s});
    }
    std::sort(means.begin(), means.end());
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < k; ++r) {
      int s = means[r].second;
      for (int i = 0; i < 10; ++i) {
        xs.push_back(metric[s][i]);
        ys.push_back(human[s][i]);
      }
    }
    return oracle::textbook_pearson(xs, ys);
  }
};

TEST(Topk, AllSystemsEqualsUnrestricted) {
  FiveSystems fx(1);
  DatasetScores d{"d", &fx.corpus, &fx.scores, {}};
  auto result = topk_analysis({d}, info_spec(), {5});
  EXPECT_DOUBLE_EQ(result.rows[0].mean_value,
                   evaluate_agreement(fx.corpus, fx.scores, info_spec()).value);
  EXPECT_TRUE(result.warnings.empty());
}

TEST(Topk, PerKMatchesOracleAndAveragesDatasets) {
  FiveSystems a(2), b(3);
  std::vector<DatasetScores> ds = {{"a", &a.corpus, &a.scores, {}}, {"b", &b.corpus, &b.scores, {}}};
  auto result = topk_analysis(ds, info_spec(), {2, 3, 4, 5});
  ASSERT_EQ(result.rows.size(), 4u);
  for (const auto& row : result.rows) {
    EXPECT_EQ(row.datasets, 2u);
    EXPECT_NEAR(row.mean_value, (a.oracle_topk(row.k) + b.oracle_topk(row.k)) / 2, 1e-12)
        << "k=" << row.k;
  }
}

TEST(Topk, ClampsWithWarning) {
  FiveSystems fx(4);
  DatasetScores d{"d", &fx.corpus, &fx.scores, {}};
  auto result = topk_analysis({d}, info_spec(), {9});
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_NE(result.warnings[0].find("k=9"), std::string::npos);
  EXPECT_EQ(result.rows[0].k, 9u);
  EXPECT_DOUBLE_EQ(result.rows[0].mean_value, topk_analysis({d}, info_spec(), {5}).rows[0].mean_value);
}

TEST(Topk, SingleSystemIsUndefinedAtSystemLevel) {
  FiveSystems fx(5);
  DatasetScores d{"d", &fx.corpus, &fx.scores, {}};
  EXPECT_THROW(topk_analysis({d}, info_spec(Measure::kPearson, Grouping::kPerSystemMean), {1}),
               DataError);
}

Corpus corpus_with_reference_lengths(const std::vector<std::size_t>& lengths, std::uint64_t seed,
                                     MetricScoreTable* scores) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  std::vector<TextInstance> instances;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    std::string ref;
    for (std::size_t t = 0; t < lengths[i]; ++t) ref += t ? " w" : "w";
    TextInstance inst{"i" + std::to_string(i), "src", {ref, "ignored second reference"}, {}};
    for (int s = 0; s < 3; ++s) {
      double h = noise(rng);
      std::string id = "s" + std::to_string(s);
      inst.outputs.push_back({id, "h", {{Perspective::kInfo, h}}, {}});
      scores->insert({inst.instance_id, id}, h + noise(rng));
    }
    instances.push_back(std::move(inst));
  }
  return Corpus(std::move(instances));
}

TEST(LengthBuckets, HandPartition) {
  MetricScoreTable scores("m", "d");
  auto corpus = corpus_with_reference_lengths({14, 15, 24, 25, 34, 35, 44, 45, 54, 55, 0}, 1,
                                              &scores);
  auto assigned = assign_length_buckets(corpus, whitespace_tokenize, default_length_buckets());
  std::vector<std::optional<std::size_t>> expected = {
      std::nullopt, 0, 0, 1, 1, 2, 2, 3, 3, std::nullopt, std::nullopt};
  EXPECT_EQ(assigned, expected);
  EXPECT_EQ(default_length_buckets()[3].label(), "[45,54]");
  EXPECT_EQ(default_length_buckets()[0].label(), "[15,25)");
}

TEST(LengthBuckets, UniformLengthPopulatesOneBucket) {
  MetricScoreTable scores("m", "d");
  auto corpus = corpus_with_reference_lengths(std::vector<std::size_t>(40, 20), 2, &scores);
  DatasetScores d{"d", &corpus, &scores, {}};
  auto result = length_bucket_analysis({d}, info_spec(), whitespace_tokenize, {default_length_buckets(), 10});
  ASSERT_EQ(result.size(), 4u);
  ASSERT_TRUE(result[0].mean_value);
  EXPECT_DOUBLE_EQ(*result[0].mean_value, evaluate_agreement(corpus, scores, info_spec()).value);
  for (std::size_t b = 1; b < 4; ++b) {
    EXPECT_FALSE(result[b].mean_value);  // absent, not zero
    EXPECT_EQ(result[b].datasets[0].instances, 0u);
  }
}

TEST(LengthBuckets, ThresholdIsInclusive) {
  MetricScoreTable s500("m", "d"), s499("m", "d");
  auto c500 = corpus_with_reference_lengths(std::vector<std::size_t>(500, 30), 3, &s500);
  auto c499 = corpus_with_reference_lengths(std::vector<std::size_t>(499, 30), 4, &s499);
  std::vector<DatasetScores> ds = {{"five-hundred", &c500, &s500, {}},
                                   {"four-ninety-nine", &c499, &s499, {}}};
  auto result = length_bucket_analysis(ds, info_spec(), whitespace_tokenize);
  const auto& bucket = result[1];
  ASSERT_EQ(bucket.datasets.size(), 2u);
  EXPECT_TRUE(bucket.datasets[0].retained);
  EXPECT_EQ(bucket.datasets[0].instances, 500u);
  EXPECT_FALSE(bucket.datasets[1].retained);
  EXPECT_FALSE(bucket.datasets[1].value);
  EXPECT_DOUBLE_EQ(*bucket.mean_value, *bucket.datasets[0].value);
}

TEST(LengthBuckets, MissingReference) {
  Corpus corpus({TextInstance{"i", "s", {}, {}}});
  EXPECT_THROW(assign_length_buckets(corpus, whitespace_tokenize, default_length_buckets()),
               DataError);
}

TEST(PromptCategories, Fractions) {
  std::vector<double> ten(10);
  for (int i = 0; i < 10; ++i) ten[i] = i;  // baseline 2.5 -> 7 above; 6.5 -> 3 above
  std::vector<PromptPerspectiveResult> results = {
      {"d", Perspective::kInfo, 2.5, ten},
      {"d", Perspective::kCov, 6.5, ten},
      {"d", Perspective::kFlu, -1.0, ten},
      {"d", Perspective::kFac, 9.0, ten},  // strictly greater: none
      {"d", Perspective::kAde, 0.0, ten},
  };
  auto out = prompt_category_analysis(results);
  EXPECT_DOUBLE_EQ(out.at(PerspectiveCategory::kSemanticOverlap), 0.5);
  EXPECT_DOUBLE_EQ(out.at(PerspectiveCategory::kLinguisticQuality), 1.0);
  EXPECT_DOUBLE_EQ(out.at(PerspectiveCategory::kFactualCorrectness), 0.0);
  EXPECT_EQ(out.size(), 3u);

  results.push_back({"d", Perspective::kRel, std::nullopt, ten});
  EXPECT_THROW(prompt_category_analysis(results), DataError);
}

TEST(PromptCategories, Grouping) {
  EXPECT_EQ(category_of(Perspective::kRel), PerspectiveCategory::kSemanticOverlap);
  EXPECT_EQ(category_of(Perspective::kCoh), PerspectiveCategory::kLinguisticQuality);
  EXPECT_EQ(category_of(Perspective::kFac), PerspectiveCategory::kFactualCorrectness);
  EXPECT_FALSE(category_of(Perspective::kAde));
}

Corpus systems_corpus(const std::map<std::string, double>& human,
                      const std::map<std::string, double>& metric, MetricScoreTable* scores) {
  TextInstance inst{"only", "src", {}, {}};
  for (const auto& [id, h] : human) {
    inst.outputs.push_back({id, "h", {{Perspective::kInfo, h}}, {}});
    scores->insert({"only", id}, metric.at(id));
  }
  return Corpus({inst});
}

TEST(BiasRankDifference, IdenticalAndSwapped) {
  MetricScoreTable same("m", "d"), swapped("m", "d");
  auto c1 = systems_corpus({{"a", 3}, {"b", 2}, {"c", 1}}, {{"a", 3}, {"b", 2}, {"c", 1}}, &same);
  for (const auto& r : bias_rank_difference(c1, same, Perspective::kInfo)) {
    EXPECT_EQ(r.difference, 0);
  }
  auto c2 = systems_corpus({{"a", 3}, {"b", 2}, {"c", 1}}, {{"a", 2}, {"b", 3}, {"c", 1}},
                           &swapped);
  auto diffs = bias_rank_difference(c2, swapped, Perspective::kInfo);
  EXPECT_EQ(diffs[0].system_id, "a");
  EXPECT_EQ(diffs[0].difference, -1);
  EXPECT_EQ(diffs[1].difference, +1);
  EXPECT_EQ(diffs[2].difference, 0);
}

TEST(BiasRankDifference, TwentyFourSystems) {
  // Human quality is the system number. The metric swaps s23/s24, lifts
  // s10 to the top and places s01 between s12 and s13.
  std::map<std::string, double> human, metric;
  char id[8];
  for (int i = 1; i <= 24; ++i) {
    std::snprintf(id, sizeof id, "s%02d", i);
    human[id] = i;
    metric[id] = i;
  }
  metric["s24"] = 23;
  metric["s23"] = 24;
  metric["s10"] = 30;
  metric["s01"] = 12.5;
  MetricScoreTable scores("m", "d");
  auto corpus = systems_corpus(human, metric, &scores);
  auto diffs = bias_rank_difference(corpus, scores, Perspective::kInfo);
  // Human order s24 .. s01; differences worked out by hand.
  const std::vector<long> expected = {-2, 0,  -1, -1, -1, -1, -1, -1, -1, -1, -1, -1,
                                      -2, -2, 14, -1, -1, -1, -1, -1, -1, -1, -1, 10};
  ASSERT_EQ(diffs.size(), 24u);
  long total = 0;
  for (std::size_t i = 0; i < 24; ++i) {
    std::snprintf(id, sizeof id, "s%02d", static_cast<int>(24 - i));
    EXPECT_EQ(diffs[i].system_id, id);
    EXPECT_EQ(diffs[i].human_rank, i + 1);
    EXPECT_EQ(diffs[i].difference, expected[i]) << id;
    total += diffs[i].difference;
  }
  EXPECT_EQ(total, 0);
}

TEST(BiasRankDifference, ConservationOnRandomData) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 30; ++trial) {
    std::map<std::string, double> human, metric;
    for (int s = 0; s < 3 + trial; ++s) {
      human["sys" + std::to_string(s)] = level(rng);
      metric["sys" + std::to_string(s)] = level(rng);
    }
    MetricScoreTable scores("m", "d");
    auto corpus = systems_corpus(human, metric, &scores);
    long total = 0;
    for (const auto& r : bias_rank_difference(corpus, scores, Perspective::kInfo)) {
      total += r.difference;
    }
    EXPECT_EQ(total, 0);
  }
}

TEST(BiasRankDifference, NeedsTwoSystems) {
  MetricScoreTable scores("m", "d");
  auto corpus = systems_corpus({{"a", 1}}, {{"a", 1}}, &scores);
  EXPECT_THROW(bias_rank_difference(corpus, scores, Perspective::kInfo), DataError);
}

}  // namespace
}  // namespace genscore

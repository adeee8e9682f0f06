#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genscore/types.hpp"

namespace genscore {

enum class Measure { kPearson, kSpearman, kKendallTauB, kDarrKendall, kPairwiseAccuracy };
enum class Grouping { kPooled, kPerSystemMean, kPerInstanceMean };

std::string_view measure_name(Measure m);
std::optional<Measure> parse_measure(std::string_view name);
std::string_view grouping_name(Grouping g);
std::optional<Grouping> parse_grouping(std::string_view name);

bool is_preference_measure(Measure m);

// Scalar correlations. Throw DataError on length mismatch, fewer than two
// points, or zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);
double spearman(std::span<const double> xs, std::span<const double> ys);
// Tau-b, (C - D) / sqrt((C + D + Tx)(C + D + Ty)), in O(n log n).
double kendall_tau_b(std::span<const double> xs, std::span<const double> ys);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct PairCounts {
  std::size_t concordant = 0;
  std::size_t discordant = 0;  // includes score ties
  std::size_t unresolved = 0;  // pairs with a missing score
};

PairCounts count_preference_pairs(const MetricScoreTable& scores,
                                  std::span<const PreferencePair> pairs);

// (Conc - Disc) / (Conc + Disc); ties are discordant. Throws DataError when
// no pair resolves against the table.
double darr_kendall(const MetricScoreTable& scores, std::span<const PreferencePair> pairs);

// Fraction of pairs with score(better) > score(worse); ties are incorrect.
double pairwise_accuracy(const MetricScoreTable& scores,
                         std::span<const PreferencePair> pairs);

struct AgreementSpec {
  Measure measure = Measure::kKendallTauB;
  Grouping grouping = Grouping::kPooled;
  std::optional<Perspective> perspective;      // scalar measures
  std::vector<PreferencePair> preferences;     // preference measures
};

struct CorrelationReport {
  std::string metric_name;
  Measure measure = Measure::kKendallTauB;
  Grouping grouping = Grouping::kPooled;
  std::optional<Perspective> perspective;
  double value = 0.0;
  std::size_t n = 0;
};

// Metric-human rows gathered once, so that an instance multiset (e.g. a
// bootstrap resample) can be evaluated without touching the corpus again.
class AgreementData {
 public:
  AgreementData(const Corpus& corpus, const MetricScoreTable& scores,
                const AgreementSpec& spec);

  // Corpus indices of instances that contribute at least one row or pair.
  const std::vector<std::size_t>& covered_instances() const { return covered_; }

  CorrelationReport evaluate() const;
  // `instances` holds corpus indices and may repeat.
  CorrelationReport evaluate(std::span<const std::size_t> instances) const;

 private:
  struct Row {
    std::size_t system;
    double metric;
    double human;
  };
  struct Pair {
    double better;
    double worse;
  };

  double evaluate_value(std::span<const std::size_t> instances, std::size_t* n) const;

  std::string metric_name_;
  AgreementSpec spec_;
  std::size_t system_count_ = 0;
  std::vector<std::vector<Row>> rows_;    // by corpus index
  std::vector<std::vector<Pair>> pairs_;  // by corpus index
  std::vector<std::size_t> covered_;
};

CorrelationReport evaluate_agreement(const Corpus& corpus, const MetricScoreTable& scores,
                                     const AgreementSpec& spec);

double correlate(Measure measure, std::span<const double> xs, std::span<const double> ys);

struct BootstrapOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double alpha = 0.05;
};

struct SignificanceResult {
  double p_value = 1.0;
  std::size_t resamples = 0;
  std::string winner;  // metric name, or "tie"
  std::uint64_t seed = 0;
  double observed_a = 0.0;
  double observed_b = 0.0;

  bool operator==(const SignificanceResult&) const = default;
};

// Paired bootstrap over instances. The observed better metric is tested: p is
// the fraction of resamples in which it does not strictly beat the other.
// Resample r draws from an RNG seeded by (seed, r), so the worker count never
// changes the result.
SignificanceResult bootstrap_compare(const Corpus& corpus, const MetricScoreTable& a,
                                     const MetricScoreTable& b, const AgreementSpec& spec,
                                     const BootstrapOptions& options = {});

}  // namespace genscore

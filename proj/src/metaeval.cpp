#include "genscore/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "genscore/errors.hpp"
#include "parallel.hpp"

namespace genscore {
namespace {

void check_inputs(std::span<const double> xs, std::span<const double> ys, const char* what) {
  if (xs.size() != ys.size()) {
    throw DataError(std::string(what) + ": length mismatch (" + std::to_string(xs.size()) +
                    " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw DataError(std::string(what) + ": needs at least 2 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw DataError(std::string(what) + ": non-finite input at position " + std::to_string(i));
    }
  }
}

// Values may overshoot [lo, hi] by rounding only.
double in_range(double v, double lo, double hi, const char* what) {
  constexpr double kSlack = 1e-12;
  if (!(v >= lo - kSlack && v <= hi + kSlack)) {
    throw std::logic_error(std::string(what) + " produced out-of-range value " +
                           std::to_string(v));
  }
  return std::clamp(v, lo, hi);
}

std::int64_t tied_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Counts inversions (i < j with v[i] > v[j]) while sorting v.
std::int64_t sort_counting_inversions(std::vector<double>& v, std::vector<double>& scratch,
                                      std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = sort_counting_inversions(v, scratch, lo, mid) +
                     sort_counting_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kPearson: return "pearson";
    case Measure::kSpearman: return "spearman";
    case Measure::kKendallTauB: return "kendall";
    case Measure::kDarrKendall: return "darr";
    case Measure::kPairwiseAccuracy: return "accuracy";
  }
  return "?";
}

std::optional<Measure> parse_measure(std::string_view name) {
  for (auto m : {Measure::kPearson, Measure::kSpearman, Measure::kKendallTauB,
                 Measure::kDarrKendall, Measure::kPairwiseAccuracy}) {
    if (measure_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view grouping_name(Grouping g) {
  switch (g) {
    case Grouping::kPooled: return "pooled";
    case Grouping::kPerSystemMean: return "system";
    case Grouping::kPerInstanceMean: return "instance";
  }
  return "?";
}

std::optional<Grouping> parse_grouping(std::string_view name) {
  for (auto g : {Grouping::kPooled, Grouping::kPerSystemMean, Grouping::kPerInstanceMean}) {
    if (grouping_name(g) == name) return g;
  }
  return std::nullopt;
}

bool is_preference_measure(Measure m) {
  return m == Measure::kDarrKendall || m == Measure::kPairwiseAccuracy;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys, "pearson");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("pearson: zero variance");
  return in_range(sxy / std::sqrt(sxx * syy), -1.0, 1.0, "pearson");
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share the mean 1-based rank.
    double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys, "spearman");
  auto rx = average_ranks(xs);
  auto ry = average_ranks(ys);
  try {
    return pearson(rx, ry);
  } catch (const DataError&) {
    throw DataError("spearman: zero rank variance");
  }
}

double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys, "kendall");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });

  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    x_ties += tied_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && ys[order[b]] == ys[order[a]]) ++b;
      joint_ties += tied_pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> y_seq(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) y_seq[i] = ys[order[i]];
  std::int64_t discordant = sort_counting_inversions(y_seq, scratch, 0, n);

  std::int64_t y_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && y_seq[j] == y_seq[i]) ++j;
    y_ties += tied_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t total = tied_pairs(static_cast<std::int64_t>(n));
  const std::int64_t numerator = total - x_ties - y_ties + joint_ties - 2 * discordant;
  const std::int64_t dx = total - x_ties;
  const std::int64_t dy = total - y_ties;
  if (dx == 0 || dy == 0) throw DataError("kendall: all values tied");
  double tau = static_cast<double>(numerator) /
               std::sqrt(static_cast<double>(dx) * static_cast<double>(dy));
  return in_range(tau, -1.0, 1.0, "kendall");
}

double correlate(Measure measure, std::span<const double> xs, std::span<const double> ys) {
  switch (measure) {
    case Measure::kPearson: return pearson(xs, ys);
    case Measure::kSpearman: return spearman(xs, ys);
    case Measure::kKendallTauB: return kendall_tau_b(xs, ys);
    default: throw UsageError(std::string(measure_name(measure)) + " is not a scalar correlation");
  }
}

PairCounts count_preference_pairs(const MetricScoreTable& scores,
                                  std::span<const PreferencePair> pairs) {
  PairCounts c;
  for (const auto& p : pairs) {
    auto better = scores.find(p.instance_id, p.better_id);
    auto worse = scores.find(p.instance_id, p.worse_id);
    if (!better || !worse) {
      ++c.unresolved;
    } else if (*better > *worse) {
      ++c.concordant;
    } else {
      ++c.discordant;
    }
  }
  return c;
}

double darr_kendall(const MetricScoreTable& scores, std::span<const PreferencePair> pairs) {
  auto c = count_preference_pairs(scores, pairs);
  std::size_t resolved = c.concordant + c.discordant;
  if (resolved == 0) throw DataError("darr: no preference pair resolves against the scores");
  double v = (static_cast<double>(c.concordant) - static_cast<double>(c.discordant)) /
             static_cast<double>(resolved);
  return in_range(v, -1.0, 1.0, "darr");
}

double pairwise_accuracy(const MetricScoreTable& scores, std::span<const PreferencePair> pairs) {
  auto c = count_preference_pairs(scores, pairs);
  std::size_t resolved = c.concordant + c.discordant;
  if (resolved == 0) throw DataError("accuracy: no preference pair resolves against the scores");
  double v = static_cast<double>(c.concordant) / static_cast<double>(resolved);
  return in_range(v, 0.0, 1.0, "accuracy");
}

AgreementData::AgreementData(const Corpus& corpus, const MetricScoreTable& scores,
                             const AgreementSpec& spec)
    : metric_name_(scores.metric_name()), spec_(spec) {
  rows_.resize(corpus.size());
  pairs_.resize(corpus.size());
  if (is_preference_measure(spec.measure)) {
    if (spec.preferences.empty()) {
      throw UsageError(std::string(measure_name(spec.measure)) +
                       " requires preference pairs");
    }
    for (const auto& p : spec.preferences) {
      auto idx = corpus.index_of(p.instance_id);
      if (!idx) throw DataError("preference pair references unknown instance '" + p.instance_id + "'");
      auto better = scores.find(p.instance_id, p.better_id);
      auto worse = scores.find(p.instance_id, p.worse_id);
      if (better && worse) pairs_[*idx].push_back({*better, *worse});
    }
  } else {
    if (!spec.perspective) {
      throw UsageError(std::string(measure_name(spec.measure)) + " requires a perspective");
    }
    std::map<std::string, std::size_t, std::less<>> systems;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& inst = corpus[i];
      for (const auto& out : inst.outputs) {
        auto human = out.judgment(*spec.perspective);
        auto metric = scores.find(inst.instance_id, out.system_id);
        if (!human || !metric) continue;
        auto [it, _] = systems.emplace(out.system_id, systems.size());
        rows_[i].push_back({it->second, *metric, *human});
      }
    }
    system_count_ = systems.size();
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!rows_[i].empty() || !pairs_[i].empty()) covered_.push_back(i);
  }
}

double AgreementData::evaluate_value(std::span<const std::size_t> instances,
                                     std::size_t* n) const {
  if (is_preference_measure(spec_.measure)) {
    std::size_t concordant = 0, total = 0;
    for (std::size_t i : instances) {
      for (const auto& p : pairs_[i]) {
        concordant += p.better > p.worse ? 1 : 0;
        ++total;
      }
    }
    *n = total;
    if (total == 0) throw DataError("no preference pair resolves against the scores");
    double c = static_cast<double>(concordant);
    double t = static_cast<double>(total);
    if (spec_.measure == Measure::kDarrKendall) {
      return in_range((c - (t - c)) / t, -1.0, 1.0, "darr");
    }
    return in_range(c / t, 0.0, 1.0, "accuracy");
  }

  std::vector<double> xs, ys;
  switch (spec_.grouping) {
    case Grouping::kPooled:
      for (std::size_t i : instances) {
        for (const auto& r : rows_[i]) {
          xs.push_back(r.metric);
          ys.push_back(r.human);
        }
      }
      *n = xs.size();
      return correlate(spec_.measure, xs, ys);
    case Grouping::kPerSystemMean: {
      std::vector<double> metric_sum(system_count_, 0.0), human_sum(system_count_, 0.0);
      std::vector<std::size_t> count(system_count_, 0);
      for (std::size_t i : instances) {
        for (const auto& r : rows_[i]) {
          metric_sum[r.system] += r.metric;
          human_sum[r.system] += r.human;
          ++count[r.system];
        }
      }
      for (std::size_t s = 0; s < system_count_; ++s) {
        if (count[s] == 0) continue;
        xs.push_back(metric_sum[s] / static_cast<double>(count[s]));
        ys.push_back(human_sum[s] / static_cast<double>(count[s]));
      }
      *n = xs.size();
      return correlate(spec_.measure, xs, ys);
    }
    case Grouping::kPerInstanceMean: {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t i : instances) {
        if (rows_[i].size() < 2) continue;
        xs.clear();
        ys.clear();
        for (const auto& r : rows_[i]) {
          xs.push_back(r.metric);
          ys.push_back(r.human);
        }
        try {
          sum += correlate(spec_.measure, xs, ys);
          ++used;
        } catch (const DataError&) {
          // Instances without variance carry no ranking signal.
        }
      }
      *n = used;
      if (used == 0) throw DataError("no instance supports a per-instance correlation");
      return sum / static_cast<double>(used);
    }
  }
  throw std::logic_error("unreachable grouping");
}

CorrelationReport AgreementData::evaluate(std::span<const std::size_t> instances) const {
  CorrelationReport report;
  report.metric_name = metric_name_;
  report.measure = spec_.measure;
  report.grouping = is_preference_measure(spec_.measure) ? Grouping::kPooled : spec_.grouping;
  report.perspective = spec_.perspective;
  report.value = evaluate_value(instances, &report.n);
  return report;
}

CorrelationReport AgreementData::evaluate() const { return evaluate(covered_); }

CorrelationReport evaluate_agreement(const Corpus& corpus, const MetricScoreTable& scores,
                                     const AgreementSpec& spec) {
  return AgreementData(corpus, scores, spec).evaluate();
}

SignificanceResult bootstrap_compare(const Corpus& corpus, const MetricScoreTable& a,
                                     const MetricScoreTable& b, const AgreementSpec& spec,
                                     const BootstrapOptions& options) {
  if (options.resamples < 100) throw UsageError("bootstrap: at least 100 resamples required");
  AgreementData data_a(corpus, a, spec);
  AgreementData data_b(corpus, b, spec);
  if (data_a.covered_instances() != data_b.covered_instances()) {
    throw DataError("bootstrap: '" + a.metric_name() + "' and '" + b.metric_name() +
                    "' cover different instances");
  }
  const auto& covered = data_a.covered_instances();
  if (covered.empty()) throw DataError("bootstrap: no instance is covered by both metrics");

  SignificanceResult result;
  result.resamples = options.resamples;
  result.seed = options.seed;
  result.observed_a = data_a.evaluate().value;
  result.observed_b = data_b.evaluate().value;
  const bool a_leads = result.observed_a >= result.observed_b;
  const AgreementData& leader = a_leads ? data_a : data_b;
  const AgreementData& other = a_leads ? data_b : data_a;

  std::vector<char> outperformed(options.resamples, 0);
  detail::parallel_for(options.resamples, options.workers, [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, covered.size() - 1);
    std::vector<std::size_t> sample(covered.size());
    for (auto& s : sample) s = covered[pick(rng)];
    try {
      outperformed[r] = leader.evaluate(sample).value > other.evaluate(sample).value ? 1 : 0;
    } catch (const DataError&) {
      outperformed[r] = 0;  // degenerate resample
    }
  });
  std::size_t failures = 0;
  for (char o : outperformed) failures += o ? 0 : 1;
  result.p_value = static_cast<double>(failures) / static_cast<double>(options.resamples);
  result.winner = result.p_value < options.alpha ? (a_leads ? a.metric_name() : b.metric_name())
                                                 : "tie";
  return result;
}

}  // namespace genscore

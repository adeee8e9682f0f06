#include "genscore/analysis.hpp"

#include <algorithm>
#include <set>

#include "genscore/errors.hpp"

namespace genscore {
namespace {

struct MeanAccumulator {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return sum / static_cast<double>(count); }
};

// Best-first by value, then by id.
std::vector<std::string> rank_by_mean(const std::map<std::string, MeanAccumulator>& means) {
  std::vector<std::pair<std::string, double>> items;
  for (const auto& [id, acc] : means) items.emplace_back(id, acc.mean());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (auto& [id, _] : items) out.push_back(id);
  return out;
}

const DatasetScores& checked(const DatasetScores& d) {
  if (d.corpus == nullptr || d.scores == nullptr) {
    throw UsageError("dataset '" + d.name + "' lacks a corpus or a score table");
  }
  return d;
}

Corpus restrict_systems(const Corpus& corpus, const std::set<std::string>& keep) {
  std::vector<TextInstance> instances;
  for (const auto& inst : corpus.instances()) {
    TextInstance copy = inst;
    std::erase_if(copy.outputs, [&](const SystemOutput& o) { return !keep.count(o.system_id); });
    instances.push_back(std::move(copy));
  }
  return Corpus(std::move(instances));
}

Corpus select_instances(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  std::vector<TextInstance> instances;
  for (std::size_t i : indices) instances.push_back(corpus[i]);
  return Corpus(std::move(instances));
}

std::vector<PreferencePair> restrict_pairs(const std::vector<PreferencePair>& pairs,
                                           const Corpus& corpus) {
  std::vector<PreferencePair> out;
  for (const auto& p : pairs) {
    const auto* inst = corpus.find(p.instance_id);
    if (inst && inst->find_output(p.better_id) && inst->find_output(p.worse_id)) {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> rank_systems_by_human(const Corpus& corpus, Perspective perspective) {
  std::map<std::string, MeanAccumulator> means;
  for (const auto& inst : corpus.instances()) {
    for (const auto& out : inst.outputs) {
      if (auto j = out.judgment(perspective)) {
        auto& acc = means[out.system_id];
        acc.sum += *j;
        ++acc.count;
      }
    }
  }
  return rank_by_mean(means);
}

TopkResult topk_analysis(const std::vector<DatasetScores>& datasets, const AgreementSpec& spec,
                         const std::vector<std::size_t>& ks) {
  if (!spec.perspective) throw UsageError("top-k analysis requires a perspective");
  TopkResult result;
  std::vector<std::vector<std::string>> rankings;
  for (const auto& d : datasets) {
    rankings.push_back(rank_systems_by_human(*checked(d).corpus, *spec.perspective));
    if (rankings.back().empty()) {
      throw DataError("dataset '" + d.name + "' has no human judgments for " +
                      std::string(perspective_name(*spec.perspective)));
    }
  }
  for (std::size_t k : ks) {
    if (k == 0) throw UsageError("top-k analysis: k must be >= 1");
    TopkRow row{k, 0.0, 0};
    double sum = 0.0;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto& ranking = rankings[d];
      std::size_t used = k;
      if (k > ranking.size()) {
        used = ranking.size();
        result.warnings.push_back("dataset '" + datasets[d].name + "': k=" + std::to_string(k) +
                                  " exceeds " + std::to_string(ranking.size()) +
                                  " systems; clamped");
      }
      std::set<std::string> keep(ranking.begin(), ranking.begin() + static_cast<long>(used));
      Corpus restricted = restrict_systems(*datasets[d].corpus, keep);
      AgreementSpec local = spec;
      local.preferences = restrict_pairs(spec.preferences.empty() ? datasets[d].preferences
                                                                  : spec.preferences,
                                         restricted);
      sum += evaluate_agreement(restricted, *datasets[d].scores, local).value;
      ++row.datasets;
    }
    if (row.datasets == 0) throw UsageError("top-k analysis: no datasets");
    row.mean_value = sum / static_cast<double>(row.datasets);
    result.rows.push_back(row);
  }
  return result;
}

std::string LengthBucket::label() const {
  return "[" + std::to_string(lower) + "," + std::to_string(upper) +
         (upper_inclusive ? "]" : ")");
}

std::vector<LengthBucket> default_length_buckets() {
  return {{15, 25, false}, {25, 35, false}, {35, 45, false}, {45, 54, true}};
}

std::vector<std::optional<std::size_t>> assign_length_buckets(
    const Corpus& corpus, const Tokenizer& tokenizer, const std::vector<LengthBucket>& buckets) {
  std::vector<std::optional<std::size_t>> out;
  out.reserve(corpus.size());
  for (const auto& inst : corpus.instances()) {
    if (inst.references.empty()) {
      throw DataError("instance '" + inst.instance_id + "' has no reference to measure");
    }
    std::size_t len = tokenizer(inst.references.front()).size();
    std::optional<std::size_t> which;
    for (std::size_t b = 0; b < buckets.size() && !which; ++b) {
      if (buckets[b].contains(len)) which = b;
    }
    out.push_back(which);
  }
  return out;
}

std::vector<BucketResult> length_bucket_analysis(const std::vector<DatasetScores>& datasets,
                                                 const AgreementSpec& spec,
                                                 const Tokenizer& tokenizer,
                                                 const LengthBucketOptions& options) {
  std::vector<BucketResult> results;
  for (const auto& b : options.buckets) results.push_back({b, std::nullopt, {}});
  std::vector<double> sums(options.buckets.size(), 0.0);
  std::vector<std::size_t> counts(options.buckets.size(), 0);

  for (const auto& d : datasets) {
    const Corpus& corpus = *checked(d).corpus;
    auto assignment = assign_length_buckets(corpus, tokenizer, options.buckets);
    for (std::size_t b = 0; b < options.buckets.size(); ++b) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == b) members.push_back(i);
      }
      BucketDatasetResult entry{d.name, members.size(), false, std::nullopt};
      if (!members.empty() && members.size() >= options.min_instances) {
        Corpus subset = select_instances(corpus, members);
        AgreementSpec local = spec;
        local.preferences =
            restrict_pairs(spec.preferences.empty() ? d.preferences : spec.preferences, subset);
        entry.retained = true;
        entry.value = evaluate_agreement(subset, *d.scores, local).value;
        sums[b] += *entry.value;
        ++counts[b];
      }
      results[b].datasets.push_back(std::move(entry));
    }
  }
  for (std::size_t b = 0; b < results.size(); ++b) {
    if (counts[b] > 0) results[b].mean_value = sums[b] / static_cast<double>(counts[b]);
  }
  return results;
}

std::string_view category_name(PerspectiveCategory c) {
  switch (c) {
    case PerspectiveCategory::kSemanticOverlap: return "semantic_overlap";
    case PerspectiveCategory::kLinguisticQuality: return "linguistic_quality";
    case PerspectiveCategory::kFactualCorrectness: return "factual_correctness";
  }
  return "?";
}

std::optional<PerspectiveCategory> category_of(Perspective p) {
  switch (p) {
    case Perspective::kInfo:
    case Perspective::kCov:
    case Perspective::kRel: return PerspectiveCategory::kSemanticOverlap;
    case Perspective::kFlu:
    case Perspective::kCoh: return PerspectiveCategory::kLinguisticQuality;
    case Perspective::kFac: return PerspectiveCategory::kFactualCorrectness;
    case Perspective::kAde: return std::nullopt;
  }
  return std::nullopt;
}

std::map<PerspectiveCategory, double> prompt_category_analysis(
    const std::vector<PromptPerspectiveResult>& results) {
  std::map<PerspectiveCategory, MeanAccumulator> acc;
  for (const auto& r : results) {
    if (!r.baseline) {
      throw DataError("dataset '" + r.dataset + "', " +
                      std::string(perspective_name(r.perspective)) + ": missing baseline");
    }
    if (r.prompt_values.empty()) {
      throw DataError("dataset '" + r.dataset + "', " +
                      std::string(perspective_name(r.perspective)) + ": no prompt results");
    }
    auto category = category_of(r.perspective);
    if (!category) continue;
    std::size_t improved = 0;
    for (double v : r.prompt_values) improved += v > *r.baseline ? 1 : 0;
    auto& a = acc[*category];
    a.sum += static_cast<double>(improved) / static_cast<double>(r.prompt_values.size());
    ++a.count;
  }
  std::map<PerspectiveCategory, double> out;
  for (const auto& [c, a] : acc) out[c] = a.mean();
  return out;
}

std::vector<RankDifference> bias_rank_difference(const Corpus& corpus,
                                                 const MetricScoreTable& scores,
                                                 Perspective perspective) {
  std::map<std::string, MeanAccumulator> human, metric;
  for (const auto& inst : corpus.instances()) {
    for (const auto& out : inst.outputs) {
      if (auto j = out.judgment(perspective)) {
        human[out.system_id].sum += *j;
        ++human[out.system_id].count;
      }
      if (auto s = scores.find(inst.instance_id, out.system_id)) {
        metric[out.system_id].sum += *s;
        ++metric[out.system_id].count;
      }
    }
  }
  // Only systems with both means take part.
  std::erase_if(human, [&](const auto& kv) { return !metric.count(kv.first); });
  std::erase_if(metric, [&](const auto& kv) { return !human.count(kv.first); });
  if (human.size() < 2) {
    throw DataError("bias analysis needs at least 2 systems with human and metric scores");
  }
  auto human_order = rank_by_mean(human);
  auto metric_order = rank_by_mean(metric);
  std::map<std::string, std::size_t> metric_rank;
  for (std::size_t i = 0; i < metric_order.size(); ++i) metric_rank[metric_order[i]] = i + 1;
  std::vector<RankDifference> out;
  for (std::size_t i = 0; i < human_order.size(); ++i) {
    const auto& id = human_order[i];
    std::size_t mr = metric_rank.at(id);
    out.push_back({id, i + 1, mr, static_cast<long>(i + 1) - static_cast<long>(mr)});
  }
  return out;
}

}  // namespace genscore

#include "genscore/types.hpp"

#include <cmath>
#include <set>

#include "genscore/errors.hpp"

namespace genscore {

std::string_view perspective_name(Perspective p) {
  switch (p) {
    case Perspective::kInfo: return "Info";
    case Perspective::kRel: return "Rel";
    case Perspective::kFlu: return "Flu";
    case Perspective::kCoh: return "Coh";
    case Perspective::kFac: return "Fac";
    case Perspective::kCov: return "Cov";
    case Perspective::kAde: return "Ade";
  }
  return "?";
}

std::optional<Perspective> parse_perspective(std::string_view name) {
  for (Perspective p : kAllPerspectives) {
    if (perspective_name(p) == name) return p;
  }
  return std::nullopt;
}

const SystemOutput* TextInstance::find_output(std::string_view system_id) const {
  for (const auto& out : outputs) {
    if (out.system_id == system_id) return &out;
  }
  return nullptr;
}

Corpus::Corpus(std::vector<TextInstance> instances)
    : instances_(std::move(instances)) {
  index_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const auto& inst = instances_[i];
    if (!index_.emplace(inst.instance_id, i).second) {
      throw DataError("duplicate instance_id '" + inst.instance_id + "'");
    }
    std::set<std::string_view> systems;
    for (const auto& out : inst.outputs) {
      if (!systems.insert(out.system_id).second) {
        throw DataError("duplicate system_id '" + out.system_id +
                        "' in instance '" + inst.instance_id + "'");
      }
      for (const auto& [p, v] : out.judgments) {
        if (!std::isfinite(v)) {
          throw DataError("non-finite " + std::string(perspective_name(p)) +
                          " judgment for (" + inst.instance_id + ", " +
                          out.system_id + ")");
        }
      }
      for (const auto& [k, v] : out.extra_judgments) {
        if (!std::isfinite(v)) {
          throw DataError("non-finite extra judgment '" + k + "' for (" +
                          inst.instance_id + ", " + out.system_id + ")");
        }
      }
    }
  }
}

const TextInstance* Corpus::find(std::string_view instance_id) const {
  auto idx = index_of(instance_id);
  return idx ? &instances_[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::index_of(std::string_view instance_id) const {
  auto it = index_.find(std::string(instance_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::system_ids() const {
  std::vector<std::string> ids;
  std::set<std::string_view> seen;
  for (const auto& inst : instances_) {
    for (const auto& out : inst.outputs) {
      if (seen.insert(out.system_id).second) ids.push_back(out.system_id);
    }
  }
  return ids;
}

void validate_preferences(const Corpus& corpus,
                          const std::vector<PreferencePair>& pairs) {
  for (const auto& pair : pairs) {
    if (pair.better_id == pair.worse_id) {
      throw DataError("preference pair in '" + pair.instance_id +
                      "' compares '" + pair.better_id + "' with itself");
    }
    const TextInstance* inst = corpus.find(pair.instance_id);
    if (inst == nullptr) {
      throw DataError("preference pair references unknown instance '" +
                      pair.instance_id + "'");
    }
    for (const auto* id : {&pair.better_id, &pair.worse_id}) {
      if (inst->find_output(*id) == nullptr) {
        throw DataError("preference pair references unknown system '" + *id +
                        "' in instance '" + pair.instance_id + "'");
      }
    }
  }
}

void MetricScoreTable::insert(ScoreKey key, double score) {
  if (!std::isfinite(score)) {
    throw DataError("non-finite score for (" + key.instance_id + ", " +
                    key.system_id + ")");
  }
  if (index_.count(key) != 0) {
    throw DataError("duplicate score for (" + key.instance_id + ", " +
                    key.system_id + ")");
  }
  index_.emplace(key, entries_.size());
  ++instance_counts_[key.instance_id];
  entries_.push_back({std::move(key), score});
}

std::optional<double> MetricScoreTable::find(std::string_view instance_id,
                                             std::string_view system_id) const {
  auto it = index_.find(ScoreKey{std::string(instance_id), std::string(system_id)});
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].score;
}

bool MetricScoreTable::contains_instance(std::string_view instance_id) const {
  return instance_counts_.find(instance_id) != instance_counts_.end();
}

}  // namespace genscore

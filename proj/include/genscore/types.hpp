#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace genscore {

// Human evaluation perspectives. Closed set; extra annotations go through
// the "extra:" namespace in SystemOutput::extra_judgments.
enum class Perspective { kInfo, kRel, kFlu, kCoh, kFac, kCov, kAde };

inline constexpr Perspective kAllPerspectives[] = {
    Perspective::kInfo, Perspective::kRel, Perspective::kFlu, Perspective::kCoh,
    Perspective::kFac,  Perspective::kCov, Perspective::kAde};

inline constexpr std::string_view kExtraJudgmentPrefix = "extra:";

std::string_view perspective_name(Perspective p);
std::optional<Perspective> parse_perspective(std::string_view name);

struct SystemOutput {
  std::string system_id;
  std::string hypothesis;
  std::map<Perspective, double> judgments;
  std::map<std::string, double> extra_judgments;  // keys without the prefix

  std::optional<double> judgment(Perspective p) const {
    auto it = judgments.find(p);
    if (it == judgments.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const SystemOutput&) const = default;
};

struct TextInstance {
  std::string instance_id;
  std::string source;
  std::vector<std::string> references;
  std::vector<SystemOutput> outputs;

  const SystemOutput* find_output(std::string_view system_id) const;

  bool operator==(const TextInstance&) const = default;
};

// Ordered collection of instances with an id index. Immutable once built.
class Corpus {
 public:
  Corpus() = default;
  // Validates id uniqueness and judgment finiteness; throws DataError.
  explicit Corpus(std::vector<TextInstance> instances);

  const std::vector<TextInstance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }
  const TextInstance& operator[](std::size_t i) const { return instances_[i]; }

  const TextInstance* find(std::string_view instance_id) const;
  std::optional<std::size_t> index_of(std::string_view instance_id) const;

  // System ids in order of first appearance.
  std::vector<std::string> system_ids() const;

  bool operator==(const Corpus& other) const {
    return instances_ == other.instances_;
  }

 private:
  std::vector<TextInstance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PreferencePair {
  std::string instance_id;
  std::string better_id;
  std::string worse_id;

  bool operator==(const PreferencePair&) const = default;
};

// Throws DataError when a pair is self-referential or does not resolve.
void validate_preferences(const Corpus& corpus,
                          const std::vector<PreferencePair>& pairs);

struct ScoreKey {
  std::string instance_id;
  std::string system_id;

  auto operator<=>(const ScoreKey&) const = default;
};

struct ScoreEntry {
  ScoreKey key;
  double score;

  bool operator==(const ScoreEntry&) const = default;
};

// Scores of one metric configuration, keyed by (instance, system).
// Insertion order is preserved for serialization.
class MetricScoreTable {
 public:
  MetricScoreTable() = default;
  MetricScoreTable(std::string metric_name, std::string config_digest)
      : metric_name_(std::move(metric_name)),
        config_digest_(std::move(config_digest)) {}

  const std::string& metric_name() const { return metric_name_; }
  const std::string& config_digest() const { return config_digest_; }

  // Throws DataError on non-finite scores or duplicate keys.
  void insert(ScoreKey key, double score);

  std::optional<double> find(std::string_view instance_id,
                             std::string_view system_id) const;
  bool contains_instance(std::string_view instance_id) const;

  const std::vector<ScoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const MetricScoreTable& other) const {
    return metric_name_ == other.metric_name_ &&
           config_digest_ == other.config_digest_ && entries_ == other.entries_;
  }

 private:
  std::string metric_name_;
  std::string config_digest_;
  std::vector<ScoreEntry> entries_;
  std::map<ScoreKey, std::size_t> index_;
  std::map<std::string, std::size_t, std::less<>> instance_counts_;
};

}  // namespace genscore

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "genscore/backend.hpp"

namespace genscore {

// One explicit conditional distribution. An absent source matches any
// source text; the context is the full target prefix y_<t.
struct TableEntry {
  std::optional<std::string> source;
  std::vector<std::string> context;
  std::map<std::string, double> dist;
};

struct TableDefinition {
  std::string name = "table";
  std::vector<std::string> vocabulary;  // EOS is added when missing
  std::vector<TableEntry> entries;
  // Used when no entry matches a (source, context) pair.
  std::optional<std::map<std::string, double>> default_dist;

  static TableDefinition from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Exact lookup backend. Lookup precedence: (source, context), then
// (any source, context), then the default distribution.
class TableBackend final : public Backend {
 public:
  // Validates vocabulary membership and that every distribution sums to 1
  // within 1e-9; throws DataError.
  explicit TableBackend(TableDefinition definition);

  static TableBackend load(const std::filesystem::path& path);

  BackendDescriptor descriptor() const override;
  std::vector<std::string> tokenize(std::string_view text) const override;
  ScoredSequence token_log_probs(std::string_view source,
                                 std::string_view target) const override;

  // Raw probability of `token` after `context`; 0 for tokens a matching
  // distribution leaves out. Throws BackendError when nothing matches or the
  // token is outside the vocabulary.
  double probability(std::string_view source, std::span<const std::string> context,
                     std::string_view token) const;

  const std::vector<std::string>& vocabulary() const { return definition_.vocabulary; }
  const TableDefinition& definition() const { return definition_; }

 private:
  using Dist = std::map<std::string, double, std::less<>>;

  const Dist* lookup(std::string_view source,
                     std::span<const std::string> context) const;
  static std::string key(std::string_view source, std::span<const std::string> context);

  TableDefinition definition_;
  std::unordered_map<std::string, Dist> exact_;
  std::unordered_map<std::string, Dist> any_source_;
  std::optional<Dist> default_;
  std::unordered_map<std::string, std::size_t> vocab_index_;
};

}  // namespace genscore

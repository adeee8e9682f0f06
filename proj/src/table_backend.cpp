#include "genscore/table_backend.hpp"

#include <cmath>
#include <fstream>

#include "genscore/errors.hpp"

namespace genscore {
namespace {

constexpr double kDistTolerance = 1e-9;
constexpr char kSep = '\x1f';

std::map<std::string, double> parse_dist(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("table backend: 'dist' must be an object");
  std::map<std::string, double> dist;
  for (const auto& [tok, p] : j.items()) {
    if (!p.is_number()) throw DataError("table backend: probability of '" + tok + "' must be a number");
    dist.emplace(tok, p.get<double>());
  }
  return dist;
}

}  // namespace

TableDefinition TableDefinition::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("table backend: definition must be an object");
  TableDefinition def;
  if (auto it = j.find("name"); it != j.end()) def.name = it->get<std::string>();
  auto vocab = j.find("vocabulary");
  if (vocab == j.end() || !vocab->is_array()) {
    throw DataError("table backend: missing 'vocabulary' list");
  }
  for (const auto& t : *vocab) def.vocabulary.push_back(t.get<std::string>());
  if (auto it = j.find("entries"); it != j.end()) {
    for (const auto& e : *it) {
      TableEntry entry;
      if (auto s = e.find("source"); s != e.end() && !s->is_null()) {
        entry.source = s->get<std::string>();
      }
      if (auto c = e.find("context"); c != e.end()) {
        entry.context = c->get<std::vector<std::string>>();
      }
      auto d = e.find("dist");
      if (d == e.end()) throw DataError("table backend: entry without 'dist'");
      entry.dist = parse_dist(*d);
      def.entries.push_back(std::move(entry));
    }
  }
  if (auto it = j.find("default"); it != j.end() && !it->is_null()) {
    def.default_dist = parse_dist(*it);
  }
  return def;
}

nlohmann::json TableDefinition::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["vocabulary"] = vocabulary;
  auto entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json ej;
    ej["source"] = e.source ? nlohmann::json(*e.source) : nlohmann::json(nullptr);
    ej["context"] = e.context;
    ej["dist"] = e.dist;
    entries_json.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries_json);
  if (default_dist) j["default"] = *default_dist;
  return j;
}

TableBackend::TableBackend(TableDefinition definition)
    : definition_(std::move(definition)) {
  auto& vocab = definition_.vocabulary;
  bool has_eos = false;
  for (const auto& t : vocab) has_eos = has_eos || t == kEos;
  if (!has_eos) vocab.emplace_back(kEos);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (!vocab_index_.emplace(vocab[i], i).second) {
      throw DataError("table backend: duplicate vocabulary token '" + vocab[i] + "'");
    }
  }

  auto check = [&](const std::map<std::string, double>& dist, const std::string& where) {
    double sum = 0.0;
    for (const auto& [tok, p] : dist) {
      if (!vocab_index_.count(tok)) {
        throw DataError("table backend: token '" + tok + "' in " + where +
                        " is not in the vocabulary");
      }
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("table backend: probability of '" + tok + "' in " + where +
                        " is outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTolerance) {
      throw DataError("table backend: distribution in " + where + " sums to " +
                      std::to_string(sum));
    }
    return Dist(dist.begin(), dist.end());
  };

  for (std::size_t i = 0; i < definition_.entries.size(); ++i) {
    const auto& e = definition_.entries[i];
    std::string where = "entry " + std::to_string(i);
    for (const auto& t : e.context) {
      if (!vocab_index_.count(t)) {
        throw DataError("table backend: context token '" + t + "' in " + where +
                        " is not in the vocabulary");
      }
    }
    auto& target = e.source ? exact_ : any_source_;
    std::string k = key(e.source.value_or(""), e.context);
    if (!target.emplace(k, check(e.dist, where)).second) {
      throw DataError("table backend: " + where + " duplicates an earlier entry");
    }
  }
  if (definition_.default_dist) default_ = check(*definition_.default_dist, "default");
}

TableBackend TableBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    return TableBackend(TableDefinition::from_json(j));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string TableBackend::key(std::string_view source,
                              std::span<const std::string> context) {
  // Sources compare after whitespace normalization.
  std::string k = join_tokens(whitespace_tokenize(source));
  k += kSep;
  k += join_tokens(context, std::string_view(&kSep, 1));
  return k;
}

BackendDescriptor TableBackend::descriptor() const {
  return {definition_.name, BackendKind::kTable, std::string(kWhitespaceTokenizerId)};
}

std::vector<std::string> TableBackend::tokenize(std::string_view text) const {
  return whitespace_tokenize(text);
}

const TableBackend::Dist* TableBackend::lookup(
    std::string_view source, std::span<const std::string> context) const {
  if (auto it = exact_.find(key(source, context)); it != exact_.end()) return &it->second;
  if (auto it = any_source_.find(key("", context)); it != any_source_.end()) {
    return &it->second;
  }
  return default_ ? &*default_ : nullptr;
}

double TableBackend::probability(std::string_view source,
                                 std::span<const std::string> context,
                                 std::string_view token) const {
  if (!vocab_index_.count(std::string(token))) {
    throw BackendError("table backend: token '" + std::string(token) +
                       "' is outside the declared vocabulary");
  }
  const Dist* dist = lookup(source, context);
  if (dist == nullptr) {
    throw BackendError("table backend: no distribution for context [" +
                       join_tokens(context) + "] given source '" +
                       std::string(source) + "'");
  }
  auto it = dist->find(token);
  return it == dist->end() ? 0.0 : it->second;
}

ScoredSequence TableBackend::token_log_probs(std::string_view source,
                                             std::string_view target) const {
  ScoredSequence seq;
  seq.tokens = tokenize(target);
  seq.tokens.emplace_back(kEos);
  seq.logprobs.reserve(seq.tokens.size());
  std::span<const std::string> all(seq.tokens);
  for (std::size_t t = 0; t < all.size(); ++t) {
    double p = probability(source, all.first(t), all[t]);
    seq.logprobs.push_back(clamp_logprob(p > 0.0 ? std::log(p) : kLogProbFloor));
  }
  return seq;
}

}  // namespace genscore

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "genscore/types.hpp"

namespace genscore {

// JSONL readers report errors as "<name>:<line>: message" via DataError.

Corpus parse_corpus(std::istream& in, std::string_view name = "<stream>");
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

std::vector<PreferencePair> parse_preferences(std::istream& in,
                                              std::string_view name = "<stream>");
std::vector<PreferencePair> load_preferences(const std::filesystem::path& path);
void save_preferences(const std::vector<PreferencePair>& pairs,
                      const std::filesystem::path& path);

// Score files: a header record, then one record per entry. Reals are written
// with 17 significant digits so a reload is bit-identical.
MetricScoreTable parse_scores(std::istream& in, std::string_view name = "<stream>");
MetricScoreTable load_scores(const std::filesystem::path& path);
void write_scores(std::ostream& out, const MetricScoreTable& table);
void save_scores(const MetricScoreTable& table, const std::filesystem::path& path);

// "%.17g" rendering used by every report writer.
std::string format_real(double value);

}  // namespace genscore

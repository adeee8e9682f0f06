#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "genscore/backend.hpp"

namespace genscore {

struct BackendSpec {
  BackendKind kind = BackendKind::kTable;
  // table: definition JSON. copy-ngram: a JSON config
  //   {"train": "<parallel.jsonl>", "alpha": .., "lambda_copy": .., ...}
  // (relative paths resolve against the config's directory) or a parallel
  // corpus .jsonl trained with default parameters.
  std::optional<std::filesystem::path> config;
  std::string endpoint;        // external
  std::size_t connections = 1; // external pool size
};

std::optional<BackendKind> parse_backend_kind(std::string_view name);

// Throws UsageError for missing configuration, DataError for bad files.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

}  // namespace genscore

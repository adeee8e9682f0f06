#include "genscore/backend_factory.hpp"

#include <fstream>

#include <json.hpp>

#include "genscore/copy_ngram.hpp"
#include "genscore/errors.hpp"
#include "genscore/external_backend.hpp"
#include "genscore/table_backend.hpp"

namespace genscore {
namespace {

std::unique_ptr<Backend> make_copy_ngram(const std::filesystem::path& config) {
  if (config.extension() == ".jsonl") {
    auto corpus = load_parallel_corpus(config);
    return std::make_unique<CopyNgramModel>(CopyNgramModel::train(corpus));
  }
  std::ifstream in(config);
  if (!in) throw DataError("cannot open '" + config.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(config.string() + ": " + e.what());
  }
  CopyNgramParams params;
  std::filesystem::path train;
  try {
    train = j.at("train").get<std::string>();
    params.alpha = j.value("alpha", params.alpha);
    params.lambda_copy = j.value("lambda_copy", params.lambda_copy);
    params.lambda_bigram = j.value("lambda_bigram", params.lambda_bigram);
    params.lambda_unigram = j.value("lambda_unigram", params.lambda_unigram);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(config.string() + ": " + e.what());
  }
  if (train.is_relative()) train = config.parent_path() / train;
  auto corpus = load_parallel_corpus(train);
  return std::make_unique<CopyNgramModel>(CopyNgramModel::train(corpus, params));
}

}  // namespace

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  for (auto k : {BackendKind::kTable, BackendKind::kCopyNgram, BackendKind::kExternal}) {
    if (backend_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::kTable:
      if (!spec.config) throw UsageError("the table backend requires --backend-config");
      return std::make_unique<TableBackend>(TableBackend::load(*spec.config));
    case BackendKind::kCopyNgram:
      if (!spec.config) throw UsageError("the copy-ngram backend requires --backend-config");
      return make_copy_ngram(*spec.config);
    case BackendKind::kExternal: {
      if (spec.endpoint.empty()) {
        throw UsageError("the external backend requires an endpoint "
                         "(--endpoint or GENSCORE_BACKEND_ENDPOINT)");
      }
      ExternalOptions options;
      options.pool_size = spec.connections;
      return std::make_unique<ExternalBackend>(spec.endpoint, options);
    }
  }
  throw UsageError("unknown backend kind");
}

}  // namespace genscore

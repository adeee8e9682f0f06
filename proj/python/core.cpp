// Python bindings. Enum-like arguments are taken as the same strings the
// command-line tool accepts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "genscore/backend_factory.hpp"
#include "genscore/baselines.hpp"
#include "genscore/corpus_io.hpp"
#include "genscore/errors.hpp"
#include "genscore/metaeval.hpp"
#include "genscore/prompt_ensemble.hpp"
#include "genscore/prompting.hpp"
#include "genscore/scoring.hpp"

namespace py = pybind11;
using namespace genscore;

namespace {

template <class T>
T parse_or_throw(std::optional<T> parsed, std::string_view what, std::string_view value) {
  if (!parsed) throw UsageError("unknown " + std::string(what) + " '" + std::string(value) + "'");
  return *parsed;
}

PromptSet prompt_set_from(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) {
    auto name = obj.cast<std::string>();
    if (const auto* set = find_builtin_prompt_set(name)) return *set;
    throw UsageError("unknown built-in prompt set '" + name + "'");
  }
  PromptSet set{"custom", PromptUsage::kSourceToHyp, obj.cast<std::vector<std::string>>()};
  set.validate();
  return set;
}

// documents feed the idf statistics when weights == "idf".
ScoreConfig make_config(const Backend& backend, const std::string& direction,
                        const std::string& weights, const std::string& aggregation,
                        const std::string& multi_ref, const std::optional<std::string>& prompt,
                        const py::object& prompt_set, const std::string& prompt_position,
                        bool score_prompt_tokens, const std::vector<std::string>& documents) {
  ScoreConfig c;
  c.direction = parse_or_throw(parse_direction(direction), "direction", direction);
  if (weights == "uniform") {
    c.weights = UniformWeights{};
  } else if (weights == "nostop") {
    c.weights = NoStopWeights{default_stopwords()};
  } else if (weights == "idf") {
    if (documents.empty()) throw UsageError("idf weights need documents");
    c.weights = build_idf(backend, documents);
  } else if (weights == "prior") {
    c.weights = TargetPriorWeights{};
  } else {
    throw UsageError("unknown weights '" + weights + "'");
  }
  if (aggregation != "mean" && aggregation != "sum") {
    throw UsageError("unknown aggregation '" + aggregation + "'");
  }
  c.aggregation = aggregation == "mean" ? Aggregation::kMean : Aggregation::kSum;
  if (multi_ref != "max" && multi_ref != "mean") {
    throw UsageError("unknown multi_ref '" + multi_ref + "'");
  }
  c.multi_ref = multi_ref == "max" ? MultiRefAggregation::kMax : MultiRefAggregation::kMean;
  if (prompt_position != "target" && prompt_position != "source") {
    throw UsageError("prompt_position must be 'target' or 'source'");
  }
  auto position =
      prompt_position == "target" ? PromptPosition::kTargetPrepend : PromptPosition::kSourceAppend;
  if (prompt && !prompt_set.is_none()) throw UsageError("give prompt or prompt_set, not both");
  if (prompt) c.prompt = PromptApplication{*prompt, position, score_prompt_tokens};
  if (!prompt_set.is_none()) {
    c.prompt = PromptApplication{prompt_set_from(prompt_set), position, score_prompt_tokens};
  }
  return c;
}

std::vector<std::string> corpus_documents(const Corpus& corpus) {
  std::vector<std::string> docs;
  for (const auto& inst : corpus.instances()) {
    for (const auto& r : inst.references) docs.push_back(r);
    for (const auto& o : inst.outputs) docs.push_back(o.hypothesis);
  }
  return docs;
}

AgreementSpec make_spec(const std::string& measure, const std::string& grouping,
                        const std::optional<std::string>& perspective,
                        const std::optional<std::filesystem::path>& preferences) {
  AgreementSpec spec;
  spec.measure = parse_or_throw(parse_measure(measure), "measure", measure);
  spec.grouping = parse_or_throw(parse_grouping(grouping), "grouping", grouping);
  if (perspective) {
    spec.perspective = parse_or_throw(parse_perspective(*perspective), "perspective", *perspective);
  }
  if (preferences) spec.preferences = load_preferences(*preferences);
  return spec;
}

py::dict prf(const PrfScore& s) {
  py::dict d;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  auto backend_error = py::register_exception<BackendError>(m, "BackendError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", backend_error.ptr());

  py::class_<Corpus>(m, "Corpus")
      .def("__len__", &Corpus::size)
      .def("system_ids", &Corpus::system_ids)
      .def("instance_ids", [](const Corpus& c) {
        std::vector<std::string> ids;
        for (const auto& i : c.instances()) ids.push_back(i.instance_id);
        return ids;
      })
      .def("save", [](const Corpus& c, const std::filesystem::path& p) { save_corpus(c, p); });
  m.def("load_corpus", &load_corpus, py::arg("path"));

  py::class_<MetricScoreTable>(m, "ScoreTable")
      .def_property_readonly("metric_name", &MetricScoreTable::metric_name)
      .def_property_readonly("config_digest", &MetricScoreTable::config_digest)
      .def("__len__", &MetricScoreTable::size)
      .def("get", &MetricScoreTable::find, py::arg("instance_id"), py::arg("system_id"))
      .def("to_dict",
           [](const MetricScoreTable& t) {
             py::dict d;
             for (const auto& e : t.entries()) {
               d[py::make_tuple(e.key.instance_id, e.key.system_id)] = e.score;
             }
             return d;
           })
      .def("save", [](const MetricScoreTable& t, const std::filesystem::path& p) {
        save_scores(t, p);
      });
  m.def("load_scores", &load_scores, py::arg("path"));

  py::class_<Backend, std::shared_ptr<Backend>>(m, "Backend")
      .def_property_readonly("name", [](const Backend& b) { return b.descriptor().name; })
      .def_property_readonly("kind",
                             [](const Backend& b) {
                               return std::string(backend_kind_name(b.descriptor().kind));
                             })
      .def("tokenize", &Backend::tokenize, py::arg("text"))
      .def(
          "token_log_probs",
          [](const Backend& b, const std::string& source, const std::string& target) {
            auto seq = b.token_log_probs(source, target);
            return py::make_tuple(seq.tokens, seq.logprobs);
          },
          py::arg("source"), py::arg("target"));

  m.def(
      "make_backend",
      [](const std::string& kind, std::optional<std::filesystem::path> config,
         const std::string& endpoint, std::size_t connections) {
        BackendSpec spec;
        spec.kind = parse_or_throw(parse_backend_kind(kind), "backend", kind);
        spec.config = std::move(config);
        spec.endpoint = endpoint;
        spec.connections = connections;
        return std::shared_ptr<Backend>(make_backend(spec));
      },
      py::arg("kind"), py::arg("config") = py::none(), py::arg("endpoint") = "",
      py::arg("connections") = 1);

  m.def(
      "score_pair",
      [](const Backend& backend, const std::string& source, const std::string& target,
         const std::string& weights, const std::string& aggregation,
         const std::optional<std::string>& prompt, const py::object& prompt_set,
         const std::string& prompt_position, bool score_prompt_tokens,
         const std::vector<std::string>& documents) {
        auto c = make_config(backend, "f", weights, aggregation, "max", prompt, prompt_set,
                             prompt_position, score_prompt_tokens, documents);
        py::gil_scoped_release release;
        return score_pair(backend, source, target, c);
      },
      py::arg("backend"), py::arg("source"), py::arg("target"), py::arg("weights") = "uniform",
      py::arg("aggregation") = "mean", py::arg("prompt") = py::none(),
      py::arg("prompt_set") = py::none(), py::arg("prompt_position") = "target",
      py::arg("score_prompt_tokens") = true,
      py::arg("documents") = std::vector<std::string>{});

  m.def(
      "score_corpus",
      [](const Backend& backend, const Corpus& corpus, const std::string& direction,
         const std::string& weights, const std::string& aggregation, const std::string& multi_ref,
         const std::optional<std::string>& prompt, const py::object& prompt_set,
         const std::string& prompt_position, bool score_prompt_tokens, std::size_t workers,
         bool skip_errors, const std::string& metric_name) {
        auto c = make_config(backend, direction, weights, aggregation, multi_ref, prompt,
                             prompt_set, prompt_position, score_prompt_tokens,
                             weights == "idf" ? corpus_documents(corpus)
                                              : std::vector<std::string>{});
        py::gil_scoped_release release;
        return score_corpus(backend, corpus, c, {metric_name, workers, skip_errors});
      },
      py::arg("backend"), py::arg("corpus"), py::arg("direction") = "f",
      py::arg("weights") = "uniform", py::arg("aggregation") = "mean",
      py::arg("multi_ref") = "max", py::arg("prompt") = py::none(),
      py::arg("prompt_set") = py::none(), py::arg("prompt_position") = "target",
      py::arg("score_prompt_tokens") = true, py::arg("workers") = 1,
      py::arg("skip_errors") = false, py::arg("metric_name") = "genscore");

  m.def("builtin_prompt_set",
        [](const std::string& name) { return prompt_set_from(py::str(name)).prompts; },
        py::arg("name"));

  m.def("pearson", [](std::vector<double> x, std::vector<double> y) { return pearson(x, y); });
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) { return spearman(x, y); });
  m.def("kendall_tau_b",
        [](std::vector<double> x, std::vector<double> y) { return kendall_tau_b(x, y); });

  m.def(
      "evaluate_agreement",
      [](const Corpus& corpus, const MetricScoreTable& scores, const std::string& measure,
         const std::string& grouping, const std::optional<std::string>& perspective,
         const std::optional<std::filesystem::path>& preferences) {
        auto r = evaluate_agreement(corpus, scores,
                                    make_spec(measure, grouping, perspective, preferences));
        py::dict d;
        d["metric"] = r.metric_name;
        d["measure"] = std::string(measure_name(r.measure));
        d["grouping"] = std::string(grouping_name(r.grouping));
        d["value"] = r.value;
        d["n"] = r.n;
        return d;
      },
      py::arg("corpus"), py::arg("scores"), py::arg("measure") = "kendall",
      py::arg("grouping") = "pooled", py::arg("perspective") = py::none(),
      py::arg("preferences") = py::none());

  m.def(
      "bootstrap_compare",
      [](const Corpus& corpus, const MetricScoreTable& a, const MetricScoreTable& b,
         const std::string& measure, const std::string& grouping,
         const std::optional<std::string>& perspective,
         const std::optional<std::filesystem::path>& preferences, std::size_t resamples,
         std::uint64_t seed, std::size_t workers, double alpha) {
        auto spec = make_spec(measure, grouping, perspective, preferences);
        SignificanceResult r;
        {
          py::gil_scoped_release release;
          r = bootstrap_compare(corpus, a, b, spec, {resamples, seed, workers, alpha});
        }
        py::dict d;
        d["p_value"] = r.p_value;
        d["resamples"] = r.resamples;
        d["winner"] = r.winner;
        d["seed"] = r.seed;
        d["observed_a"] = r.observed_a;
        d["observed_b"] = r.observed_b;
        return d;
      },
      py::arg("corpus"), py::arg("a"), py::arg("b"), py::arg("measure") = "kendall",
      py::arg("grouping") = "pooled", py::arg("perspective") = py::none(),
      py::arg("preferences") = py::none(), py::arg("resamples") = 1000, py::arg("seed") = 0,
      py::arg("workers") = 1, py::arg("alpha") = 0.05);

  m.def(
      "sentence_bleu",
      [](const std::string& h, const std::vector<std::string>& refs) {
        return sentence_bleu(h, refs);
      },
      py::arg("hypothesis"), py::arg("references"));
  m.def("rouge_n", [](const std::string& h, const std::string& r, std::size_t n) {
    return prf(rouge_n(h, r, n));
  }, py::arg("hypothesis"), py::arg("reference"), py::arg("n"));
  m.def("rouge_l", [](const std::string& h, const std::string& r) { return prf(rouge_l(h, r)); },
        py::arg("hypothesis"), py::arg("reference"));
  m.def("chrf", [](const std::string& h, const std::string& r) { return chrf(h, r); },
        py::arg("hypothesis"), py::arg("reference"));
  m.def(
      "score_corpus_baseline",
      [](const Corpus& corpus, const std::string& metric, std::size_t workers) {
        return score_corpus_baseline(
            corpus, parse_or_throw(parse_baseline(metric), "baseline", metric), workers);
      },
      py::arg("corpus"), py::arg("metric"), py::arg("workers") = 1);
}

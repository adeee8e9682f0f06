// genscore command-line front end: score, metaeval, prompt-search.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 usage, 3 data, 4 backend.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "genscore/analysis.hpp"
#include "genscore/backend_factory.hpp"
#include "genscore/baselines.hpp"
#include "genscore/corpus_io.hpp"
#include "genscore/digest.hpp"
#include "genscore/errors.hpp"
#include "genscore/metaeval.hpp"
#include "genscore/prompt_ensemble.hpp"
#include "genscore/prompting.hpp"
#include "genscore/scoring.hpp"

namespace genscore {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kData = 3, kBackend = 4 };

// Everything a run touched, written next to each output.
struct Manifest {
  std::vector<std::string> command;
  std::string config_digest;
  std::optional<BackendDescriptor> backend;
  std::vector<fs::path> inputs;
  std::uint64_t seed = 0;

  void add_input(const fs::path& p) {
    if (std::find(inputs.begin(), inputs.end(), p) == inputs.end()) inputs.push_back(p);
  }

  ordered_json to_json() const {
    ordered_json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config_digest"] = config_digest;
    if (backend) {
      j["backend"] = {{"name", backend->name},
                      {"kind", backend_kind_name(backend->kind)},
                      {"tokenizer_id", backend->tokenizer_id}};
    } else {
      j["backend"] = nullptr;
    }
    ordered_json in = ordered_json::array();
    for (const auto& p : inputs) in.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
    j["inputs"] = in;
    j["seed"] = seed;
    return j;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) { row(header); }
  void row(std::initializer_list<std::string_view> fields) {
    bool first = true;
    for (auto f : fields) {
      if (!first) text_ += ',';
      text_ += csv_field(f);
      first = false;
    }
    text_ += '\n';
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

ordered_json real_or_null(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// ---- shared option groups ----

struct BackendOptions {
  std::string kind = "table";
  std::string config;
  std::string endpoint;
  std::size_t connections = 0;  // 0: match --workers

  void add(CLI::App* app) {
    app->add_option("--backend", kind, "table | copy-ngram | external")
        ->check(CLI::IsMember({"table", "copy-ngram", "external"}));
    app->add_option("--backend-config", config, "table definition or copy-ngram config/corpus");
    app->add_option("--endpoint", endpoint,
                    "external backend endpoint (http://host:port or stdio:COMMAND); "
                    "defaults to $GENSCORE_BACKEND_ENDPOINT");
    app->add_option("--connections", connections, "external backend connection pool size");
  }

  std::unique_ptr<Backend> make(std::size_t workers, Manifest& manifest) const {
    BackendSpec spec;
    spec.kind = *parse_backend_kind(kind);
    if (!config.empty()) {
      spec.config = config;
      manifest.add_input(config);
    }
    spec.endpoint = endpoint;
    if (spec.kind == BackendKind::kExternal && spec.endpoint.empty()) {
      if (const char* env = std::getenv("GENSCORE_BACKEND_ENDPOINT")) spec.endpoint = env;
    }
    spec.connections = connections ? connections : std::max<std::size_t>(1, workers);
    auto backend = make_backend(spec);
    manifest.backend = backend->descriptor();
    return backend;
  }
};

struct ScoringOptions {
  std::string direction = "faithfulness";
  std::string weights = "uniform";
  std::string stopwords;
  std::string aggregation = "mean";
  std::string multi_ref = "max";
  std::string prompt;
  std::string prompt_set;
  std::string position = "target-prepend";
  std::string score_prompt_tokens = "true";

  void add(CLI::App* app, bool with_prompt) {
    app->add_option("--direction", direction, "faithfulness | precision | recall | f")
        ->check(CLI::IsMember({"faithfulness", "precision", "recall", "f"}));
    app->add_option("--weights", weights, "uniform | nostop | idf | prior")
        ->check(CLI::IsMember({"uniform", "nostop", "idf", "prior"}));
    app->add_option("--stopwords", stopwords, "stopword file for --weights nostop");
    app->add_option("--agg", aggregation, "mean | sum")->check(CLI::IsMember({"mean", "sum"}));
    app->add_option("--multi-ref", multi_ref, "max | mean")->check(CLI::IsMember({"max", "mean"}));
    if (with_prompt) {
      auto* p = app->add_option("--prompt", prompt, "single prompt");
      app->add_option("--prompt-set", prompt_set, "ensemble over a built-in set (s2h, h2r) or file")
          ->excludes(p);
    }
    app->add_option("--prompt-position", position, "source-append | target-prepend")
        ->check(CLI::IsMember({"source-append", "target-prepend"}));
    app->add_option("--score-prompt-tokens", score_prompt_tokens, "true | false")
        ->check(CLI::IsMember({"true", "false", "1", "0"}));
  }

  ScoreConfig make(const Backend& backend, const Corpus& corpus, Manifest& manifest) const {
    ScoreConfig c;
    c.direction = *parse_direction(direction);
    c.aggregation = aggregation == "sum" ? Aggregation::kSum : Aggregation::kMean;
    c.multi_ref = multi_ref == "mean" ? MultiRefAggregation::kMean : MultiRefAggregation::kMax;
    if (weights == "nostop") {
      if (stopwords.empty()) {
        c.weights = NoStopWeights{default_stopwords()};
      } else {
        c.weights = load_stopwords(stopwords);
        manifest.add_input(stopwords);
      }
    } else if (weights == "idf") {
      // Document frequencies over every hypothesis and reference in the corpus.
      std::vector<std::string> docs;
      for (const auto& inst : corpus.instances()) {
        for (const auto& r : inst.references) docs.push_back(r);
        for (const auto& o : inst.outputs) docs.push_back(o.hypothesis);
      }
      c.weights = build_idf(backend, docs);
    } else if (weights == "prior") {
      c.weights = TargetPriorWeights{};
    }
    if (!stopwords.empty() && weights != "nostop") {
      throw UsageError("--stopwords only applies to --weights nostop");
    }
    PromptApplication app;
    app.position = position == "source-append" ? PromptPosition::kSourceAppend
                                                : PromptPosition::kTargetPrepend;
    app.score_prompt_tokens = score_prompt_tokens == "true" || score_prompt_tokens == "1";
    if (!prompt_set.empty()) {
      app.prompt = resolve_prompt_set(prompt_set, manifest);
      c.prompt = app;
    } else if (!prompt.empty()) {
      app.prompt = prompt;
      c.prompt = app;
    } else {
      // Position settings still apply to prompt-search.
      app.prompt = std::string();
      c.prompt = app;
      if (position == "target-prepend" && app.score_prompt_tokens) c.prompt.reset();
    }
    return c;
  }

  static PromptSet resolve_prompt_set(const std::string& name, Manifest& manifest) {
    if (const auto* builtin = find_builtin_prompt_set(name)) return *builtin;
    if (!fs::exists(name)) {
      throw UsageError("'" + name + "' is neither a built-in prompt set (s2h, h2r) nor a file");
    }
    manifest.add_input(name);
    return load_prompt_set(name);
  }
};

struct AgreementOptions {
  std::string measure = "kendall";
  std::string grouping = "pooled";
  std::string perspective;
  std::string preferences;

  void add(CLI::App* app) {
    app->add_option("--measure", measure, "pearson | spearman | kendall | darr | accuracy")
        ->check(CLI::IsMember({"pearson", "spearman", "kendall", "darr", "accuracy"}));
    app->add_option("--grouping", grouping, "pooled | system | instance")
        ->check(CLI::IsMember({"pooled", "system", "instance"}));
    app->add_option("--perspective", perspective, "Info | Rel | Flu | Coh | Fac | Cov | Ade");
    app->add_option("--preferences", preferences, "preference pairs (JSONL)");
  }

  AgreementSpec make(const Corpus& corpus, Manifest& manifest) const {
    AgreementSpec spec;
    spec.measure = *parse_measure(measure);
    spec.grouping = *parse_grouping(grouping);
    if (!perspective.empty()) {
      spec.perspective = parse_perspective(perspective);
      if (!spec.perspective) throw UsageError("unknown perspective '" + perspective + "'");
    }
    if (!preferences.empty()) {
      manifest.add_input(preferences);
      spec.preferences = load_preferences(preferences);
      validate_preferences(corpus, spec.preferences);
    }
    if (is_preference_measure(spec.measure) && spec.preferences.empty()) {
      throw UsageError("--measure " + measure + " needs --preferences");
    }
    if (!is_preference_measure(spec.measure) && !spec.perspective) {
      throw UsageError("--measure " + measure + " needs --perspective");
    }
    return spec;
  }
};

Corpus load_input_corpus(const std::string& path, Manifest& manifest) {
  manifest.add_input(path);
  return load_corpus(path);
}

// ---- score ----

struct ScoreCommand {
  std::string corpus;
  std::string out;
  std::string metric = "genscore";
  std::string metric_name;
  std::size_t workers = 1;
  bool skip_errors = false;
  std::uint64_t seed = 0;
  BackendOptions backend;
  ScoringOptions scoring;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("score", "score a corpus with a backend or baseline metric");
    app->add_option("--corpus", corpus, "corpus JSONL")->required();
    app->add_option("--out", out, "score file to write")->required();
    app->add_option("--metric", metric, "genscore | bleu | rouge1 | rouge2 | rougeL | chrf")
        ->check(CLI::IsMember({"genscore", "bleu", "rouge1", "rouge2", "rougeL", "chrf"}));
    app->add_option("--metric-name", metric_name, "name recorded in the score file");
    app->add_option("--workers", workers, "parallel workers")->check(CLI::Range(1, 1024));
    app->add_flag("--skip-errors", skip_errors, "leave failing pairs out instead of aborting");
    app->add_option("--seed", seed, "recorded in the manifest");
    backend.add(app);
    scoring.add(app, true);
    app->callback([this] { run(); });
  }

  Manifest manifest;

  void run() {
    manifest.seed = seed;
    Corpus data = load_input_corpus(corpus, manifest);
    MetricScoreTable table;
    if (metric != "genscore") {
      table = score_corpus_baseline(data, *parse_baseline(metric), workers, skip_errors);
      if (!metric_name.empty()) table = renamed(table, metric_name);
    } else {
      auto model = backend.make(workers, manifest);
      auto config = scoring.make(*model, data, manifest);
      CorpusScoreOptions options;
      options.metric_name = metric_name.empty() ? "genscore" : metric_name;
      options.workers = workers;
      options.skip_errors = skip_errors;
      table = score_corpus(*model, data, config, options);
    }
    manifest.config_digest = table.config_digest();
    save_scores(table, out);
    write_json(out + ".manifest.json", manifest.to_json());
    std::cerr << "scored " << table.size() << " pairs -> " << out << "\n";
  }

  static MetricScoreTable renamed(const MetricScoreTable& t, const std::string& name) {
    MetricScoreTable out(name, t.config_digest());
    for (const auto& e : t.entries()) out.insert(e.key, e.score);
    return out;
  }
};

// ---- metaeval ----

struct DatasetArg {
  std::string name;
  Corpus corpus;
  MetricScoreTable scores;
};

struct MetaevalCommand {
  std::string corpus;
  std::vector<std::string> scores;
  std::vector<std::string> datasets;
  std::string out;
  std::vector<std::string> compare;
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t workers = 1;
  std::vector<std::size_t> topk;
  bool buckets = false;
  std::size_t min_bucket_instances = 500;
  bool bias = false;
  std::string prompt_categories;
  AgreementOptions agreement;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("metaeval", "metric-human agreement and analyses");
    app->add_option("--corpus", corpus, "corpus JSONL with judgments");
    app->add_option("--scores", scores, "score file(s) to evaluate");
    app->add_option("--dataset", datasets,
                    "NAME=CORPUS:SCORES; repeat for analyses averaged over datasets");
    app->add_option("--out", out, "report prefix (writes PREFIX.csv, PREFIX.json, ...)")
        ->required();
    app->add_option("--compare", compare, "two score files for a paired bootstrap")
        ->expected(2);
    app->add_option("--bootstrap", bootstrap, "bootstrap resamples");
    app->add_option("--seed", seed, "bootstrap seed");
    app->add_option("--alpha", alpha, "significance level");
    app->add_option("--workers", workers, "bootstrap workers")->check(CLI::Range(1, 1024));
    app->add_option("--topk", topk, "top-k system analysis for these k")->delimiter(',');
    app->add_flag("--buckets", buckets, "reference-length bucket analysis");
    app->add_option("--min-bucket-instances", min_bucket_instances,
                    "datasets with fewer instances in a bucket are dropped from it");
    app->add_flag("--bias", bias, "system rank differences (human - metric)");
    app->add_option("--prompt-categories", prompt_categories,
                    "JSON list of {dataset, perspective, baseline, prompt_values}");
    agreement.add(app);
    app->callback([this] { run(); });
  }

  Manifest manifest;

  std::vector<DatasetArg> load_datasets() {
    std::vector<DatasetArg> out_sets;
    for (const auto& spec : datasets) {
      auto eq = spec.find('=');
      auto colon = spec.find(':', eq == std::string::npos ? 0 : eq + 1);
      if (eq == std::string::npos || colon == std::string::npos) {
        throw UsageError("--dataset expects NAME=CORPUS:SCORES, got '" + spec + "'");
      }
      std::string c = spec.substr(eq + 1, colon - eq - 1), s = spec.substr(colon + 1);
      manifest.add_input(s);
      out_sets.push_back({spec.substr(0, eq), load_input_corpus(c, manifest), load_scores(s)});
    }
    if (!corpus.empty()) {
      Corpus data = load_input_corpus(corpus, manifest);
      for (const auto& s : scores) {
        manifest.add_input(s);
        auto table = load_scores(s);
        out_sets.push_back({table.metric_name(), data, std::move(table)});
      }
    } else if (!scores.empty()) {
      throw UsageError("--scores needs --corpus");
    }
    return out_sets;
  }

  void run() {
    manifest.seed = seed;
    auto sets = load_datasets();
    if (sets.empty() && compare.empty() && prompt_categories.empty()) {
      throw UsageError("nothing to evaluate: give --corpus with --scores, --dataset, "
                       "--compare or --prompt-categories");
    }
    ordered_json report;
    std::vector<std::string> digests;

    std::optional<AgreementSpec> spec;
    auto need_spec = [&](const Corpus& c) -> const AgreementSpec& {
      if (!spec) spec = agreement.make(c, manifest);
      return *spec;
    };

    // Correlations per dataset/score file.
    if (!sets.empty()) {
      Csv csv({"dataset", "metric", "measure", "grouping", "perspective", "value", "n"});
      ordered_json rows = ordered_json::array();
      for (const auto& d : sets) {
        auto r = evaluate_agreement(d.corpus, d.scores, need_spec(d.corpus));
        std::string persp = r.perspective ? std::string(perspective_name(*r.perspective)) : "";
        csv.row({d.name, r.metric_name, measure_name(r.measure), grouping_name(r.grouping), persp,
                 format_real(r.value), std::to_string(r.n)});
        rows.push_back({{"dataset", d.name},
                        {"metric", r.metric_name},
                        {"measure", measure_name(r.measure)},
                        {"grouping", grouping_name(r.grouping)},
                        {"perspective", r.perspective ? ordered_json(persp) : ordered_json(nullptr)},
                        {"value", r.value},
                        {"n", r.n}});
        digests.push_back(d.scores.config_digest());
      }
      report["correlations"] = rows;
      write_text(out + ".csv", csv.str());
    }

    if (!compare.empty()) {
      if (corpus.empty()) throw UsageError("--compare needs --corpus");
      Corpus data = load_input_corpus(corpus, manifest);
      manifest.add_input(compare[0]);
      manifest.add_input(compare[1]);
      auto a = load_scores(compare[0]);
      auto b = load_scores(compare[1]);
      if (a.metric_name() == b.metric_name()) {
        // Keep the winner field unambiguous.
        a = ScoreCommand::renamed(a, a.metric_name() + "#A");
        b = ScoreCommand::renamed(b, b.metric_name() + "#B");
      }
      BootstrapOptions options{bootstrap, seed, workers, alpha};
      auto sig = bootstrap_compare(data, a, b, need_spec(data), options);
      Csv csv({"metric_a", "metric_b", "observed_a", "observed_b", "p_value", "resamples", "seed",
               "winner"});
      csv.row({a.metric_name(), b.metric_name(), format_real(sig.observed_a),
               format_real(sig.observed_b), format_real(sig.p_value),
               std::to_string(sig.resamples), std::to_string(sig.seed), sig.winner});
      write_text(out + ".significance.csv", csv.str());
      report["significance"] = {{"metric_a", a.metric_name()},
                                {"metric_b", b.metric_name()},
                                {"observed_a", sig.observed_a},
                                {"observed_b", sig.observed_b},
                                {"p_value", sig.p_value},
                                {"resamples", sig.resamples},
                                {"seed", sig.seed},
                                {"alpha", alpha},
                                {"winner", sig.winner}};
      digests.push_back(a.config_digest());
      digests.push_back(b.config_digest());
    }

    std::vector<DatasetScores> views;
    for (const auto& d : sets) views.push_back({d.name, &d.corpus, &d.scores, {}});

    if (!topk.empty()) {
      if (views.empty()) throw UsageError("--topk needs datasets");
      auto result = topk_analysis(views, need_spec(sets.front().corpus), topk);
      Csv csv({"k", "mean_value", "datasets"});
      ordered_json rows = ordered_json::array();
      for (const auto& r : result.rows) {
        csv.row({std::to_string(r.k), format_real(r.mean_value), std::to_string(r.datasets)});
        rows.push_back({{"k", r.k}, {"mean_value", r.mean_value}, {"datasets", r.datasets}});
      }
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      report["topk"] = {{"rows", rows}, {"warnings", result.warnings}};
      write_text(out + ".topk.csv", csv.str());
    }

    if (buckets) {
      if (views.empty()) throw UsageError("--buckets needs datasets");
      LengthBucketOptions options;
      options.min_instances = min_bucket_instances;
      auto result = length_bucket_analysis(views, need_spec(sets.front().corpus),
                                           whitespace_tokenize, options);
      Csv csv({"bucket", "dataset", "instances", "retained", "value", "bucket_mean"});
      ordered_json rows = ordered_json::array();
      for (const auto& b : result) {
        ordered_json per = ordered_json::array();
        for (const auto& d : b.datasets) {
          csv.row({b.bucket.label(), d.dataset, std::to_string(d.instances),
                   d.retained ? "true" : "false", opt_real(d.value), opt_real(b.mean_value)});
          per.push_back({{"dataset", d.dataset},
                         {"instances", d.instances},
                         {"retained", d.retained},
                         {"value", real_or_null(d.value)}});
        }
        rows.push_back({{"bucket", b.bucket.label()},
                        {"mean_value", real_or_null(b.mean_value)},
                        {"datasets", per}});
      }
      report["buckets"] = {{"min_instances", min_bucket_instances}, {"rows", rows}};
      write_text(out + ".buckets.csv", csv.str());
    }

    if (bias) {
      if (views.empty()) throw UsageError("--bias needs datasets");
      if (agreement.perspective.empty()) throw UsageError("--bias needs --perspective");
      auto p = parse_perspective(agreement.perspective);
      if (!p) throw UsageError("unknown perspective '" + agreement.perspective + "'");
      Csv csv({"dataset", "system_id", "human_rank", "metric_rank", "difference"});
      ordered_json rows = ordered_json::array();
      for (const auto& d : sets) {
        for (const auto& r : bias_rank_difference(d.corpus, d.scores, *p)) {
          csv.row({d.name, r.system_id, std::to_string(r.human_rank),
                   std::to_string(r.metric_rank), std::to_string(r.difference)});
          rows.push_back({{"dataset", d.name},
                          {"system_id", r.system_id},
                          {"human_rank", r.human_rank},
                          {"metric_rank", r.metric_rank},
                          {"difference", r.difference}});
        }
      }
      report["bias"] = rows;
      write_text(out + ".bias.csv", csv.str());
    }

    if (!prompt_categories.empty()) {
      manifest.add_input(prompt_categories);
      auto results = load_prompt_results(prompt_categories);
      auto fractions = prompt_category_analysis(results);
      Csv csv({"category", "improved_fraction"});
      ordered_json obj = ordered_json::object();
      for (const auto& [c, v] : fractions) {
        csv.row({category_name(c), format_real(v)});
        obj[std::string(category_name(c))] = v;
      }
      report["prompt_categories"] = obj;
      write_text(out + ".categories.csv", csv.str());
    }

    manifest.config_digest = sha256_hex(ordered_json(digests).dump());
    write_json(out + ".json", report);
    write_json(out + ".manifest.json", manifest.to_json());
  }

  static std::vector<PromptPerspectiveResult> load_prompt_results(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      throw DataError("'" + path.string() + "' must hold a JSON list");
    }
    std::vector<PromptPerspectiveResult> out;
    try {
      for (const auto& e : j) {
        PromptPerspectiveResult r;
        r.dataset = e.at("dataset").get<std::string>();
        auto p = parse_perspective(e.at("perspective").get<std::string>());
        if (!p) throw DataError("unknown perspective in '" + path.string() + "'");
        r.perspective = *p;
        if (e.contains("baseline") && !e["baseline"].is_null()) r.baseline = e["baseline"].get<double>();
        r.prompt_values = e.at("prompt_values").get<std::vector<double>>();
        out.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("'" + path.string() + "': " + ex.what());
    }
    return out;
  }
};

// ---- prompt-search ----

struct PromptSearchCommand {
  std::string corpus;
  std::string prompt_set = "s2h";
  std::string out;
  std::string dump;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  BackendOptions backend;
  ScoringOptions scoring;
  AgreementOptions agreement;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("prompt-search", "rank prompts on a development corpus");
    app->add_option("--corpus", corpus, "development corpus with judgments");
    app->add_option("--prompt-set", prompt_set, "built-in set (s2h, h2r) or prompt file");
    app->add_option("--out", out, "report prefix (writes PREFIX.csv, PREFIX.json, ...)");
    app->add_option("--dump-builtin", dump, "print a built-in prompt set and exit")
        ->check(CLI::IsMember({"s2h", "h2r"}));
    app->add_option("--workers", workers, "parallel workers")->check(CLI::Range(1, 1024));
    app->add_option("--seed", seed, "recorded in the manifest");
    backend.add(app);
    scoring.add(app, false);
    agreement.add(app);
    app->callback([this] { run(); });
  }

  Manifest manifest;

  void run() {
    if (!dump.empty()) {
      for (const auto& p : find_builtin_prompt_set(dump)->prompts) std::cout << p << "\n";
      return;
    }
    if (corpus.empty() || out.empty()) throw UsageError("prompt-search needs --corpus and --out");
    manifest.seed = seed;
    PromptSet prompts = ScoringOptions::resolve_prompt_set(prompt_set, manifest);
    Corpus dev = load_input_corpus(corpus, manifest);
    auto model = backend.make(workers, manifest);
    auto config = scoring.make(*model, dev, manifest);
    auto spec = agreement.make(dev, manifest);
    auto ranking = prompt_search(*model, dev, prompts, config, spec, workers);

    Csv csv({"rank", "prompt", "value", "selected"});
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      csv.row({std::to_string(i + 1), ranking[i].prompt, format_real(ranking[i].value),
               i == 0 ? "true" : "false"});
      rows.push_back({{"rank", i + 1},
                      {"prompt", ranking[i].prompt},
                      {"value", ranking[i].value},
                      {"selected", i == 0}});
    }
    ordered_json report;
    report["prompt_set"] = prompts.name;
    report["measure"] = measure_name(spec.measure);
    report["grouping"] = grouping_name(spec.grouping);
    report["perspective"] =
        spec.perspective ? ordered_json(perspective_name(*spec.perspective)) : ordered_json(nullptr);
    report["selected"] = ranking.front().prompt;
    report["ranking"] = rows;
    manifest.config_digest = config_digest(config, model->descriptor());
    write_text(out + ".csv", csv.str());
    write_json(out + ".json", report);
    write_json(out + ".manifest.json", manifest.to_json());
  }
};

int run_cli(int argc, char** argv) {
  CLI::App app{"genscore: generation-likelihood text evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::vector<std::string> command(argv + 1, argv + argc);
  ScoreCommand score;
  MetaevalCommand metaeval;
  PromptSearchCommand search;
  score.manifest.command = metaeval.manifest.command = search.manifest.command = command;
  score.add(app);
  metaeval.add(app);
  search.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}

}  // namespace
}  // namespace genscore

int main(int argc, char** argv) { return genscore::run_cli(argc, argv); }

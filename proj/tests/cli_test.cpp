#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "genscore/analysis.hpp"
#include "genscore/corpus_io.hpp"
#include "genscore/metaeval.hpp"
#include "genscore/table_backend.hpp"

namespace genscore {
namespace {

namespace fs = std::filesystem;

const std::string kCli = GENSCORE_CLI;
const std::string kFixtureDir = GENSCORE_FIXTURE_DIR;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
  int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("genscore_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string table_args() const {
    return "--corpus " + kFixtureDir + "/table_corpus.jsonl --backend table --backend-config " +
           kFixtureDir + "/table_backend.json";
  }

  fs::path dir_;
};

TEST_F(CliTest, ScoreMatchesLibrary) {
  ASSERT_EQ(run("score " + table_args() + " --out " + path("s.jsonl")).code, 0);
  auto table = load_scores(path("s.jsonl"));
  EXPECT_EQ(table.size(), 6u);
  EXPECT_NEAR(*table.find("i1", "s1"), -1.039721, 1e-6);
  EXPECT_TRUE(fs::exists(path("s.jsonl.manifest.json")));
}

TEST_F(CliTest, WorkersDoNotChangeOutput) {
  for (const std::string dir : {"f", "precision", "recall"}) {
    ASSERT_EQ(run("score " + table_args() + " --direction " + dir + " --workers 1 --out " +
                  path("w1.jsonl")).code, 0);
    ASSERT_EQ(run("score " + table_args() + " --direction " + dir + " --workers 8 --out " +
                  path("w8.jsonl")).code, 0);
    EXPECT_EQ(slurp(path("w1.jsonl")), slurp(path("w8.jsonl")));
  }
}

TEST_F(CliTest, RerunIsByteIdentical) {
  std::string args = "score " + table_args() + " --workers 8 --weights idf --out " + path("a.jsonl");
  ASSERT_EQ(run(args).code, 0);
  auto first = slurp(path("a.jsonl")), first_manifest = slurp(path("a.jsonl.manifest.json"));
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(slurp(path("a.jsonl")), first);
  EXPECT_EQ(slurp(path("a.jsonl.manifest.json")), first_manifest);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("score --corpus " + kFixtureDir + "/table_corpus.jsonl --backend table --out " +
                path("x.jsonl")).code, 2);
  EXPECT_EQ(run("score " + table_args() + " --direction sideways --out " + path("x.jsonl")).code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("score --corpus " + path("missing.jsonl") + " --backend table --backend-config " +
                kFixtureDir + "/table_backend.json --out " + path("x.jsonl")).code, 3);
  EXPECT_EQ(run("score --corpus " + kFixtureDir + "/table_corpus.jsonl --backend external "
                "--endpoint stdio:/nonexistent/server --out " + path("x.jsonl")).code, 4);
}

TEST_F(CliTest, ExternalBackendFromEnvironment) {
  std::string env = "GENSCORE_BACKEND_ENDPOINT=stdio:" + std::string(GENSCORE_FAKE_BACKEND) + " ";
  std::string cmd = env + kCli + " score --corpus " + kFixtureDir +
                    "/table_corpus.jsonl --backend external --out " + path("e.jsonl") +
                    " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(load_scores(path("e.jsonl")).size(), 6u);
}

TEST_F(CliTest, BaselineMetric) {
  ASSERT_EQ(run("score --corpus " + kFixtureDir + "/table_corpus.jsonl --metric rouge1 --out " +
                path("r.jsonl")).code, 0);
  auto t = load_scores(path("r.jsonl"));
  EXPECT_EQ(t.metric_name(), "rouge1");
  EXPECT_EQ(*t.find("i2", "s2"), 1.0);  // "a b" against reference "a b"
}

// Writes a corpus whose Info judgments equal `human` and two score files:
// one equal to the judgments, one reversed.
void write_judged(const std::string& corpus_path, const std::string& good,
                  const std::string& reversed, std::size_t instances, std::size_t systems) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d;
  std::vector<TextInstance> insts;
  MetricScoreTable g("good", "x"), r("reversed", "y");
  for (std::size_t i = 0; i < instances; ++i) {
    TextInstance inst{"i" + std::to_string(i), "src", {"ref words here"}, {}};
    for (std::size_t s = 0; s < systems; ++s) {
      double h = static_cast<double>(s) + d(rng);
      std::string id = "sys" + std::to_string(s);
      inst.outputs.push_back({id, "hyp", {{Perspective::kInfo, h}}, {}});
      g.insert({inst.instance_id, id}, h);
      r.insert({inst.instance_id, id}, -h);
    }
    insts.push_back(inst);
  }
  save_corpus(Corpus(insts), corpus_path);
  save_scores(g, good);
  save_scores(r, reversed);
}

TEST_F(CliTest, MetaevalReportsAndSignificance) {
  write_judged(path("c.jsonl"), path("good.jsonl"), path("rev.jsonl"), 20, 5);
  ASSERT_EQ(run("metaeval --corpus " + path("c.jsonl") + " --scores " + path("good.jsonl") +
                " --scores " + path("rev.jsonl") + " --measure kendall --perspective Info --out " +
                path("rep")).code, 0);
  auto report = nlohmann::json::parse(slurp(path("rep.json")));
  EXPECT_EQ(report["correlations"][0]["value"].get<double>(), 1.0);
  EXPECT_EQ(report["correlations"][1]["value"].get<double>(), -1.0);
  EXPECT_NE(slurp(path("rep.csv")).find("reversed,kendall,pooled,Info,-1,100"), std::string::npos);

  ASSERT_EQ(run("metaeval --corpus " + path("c.jsonl") + " --compare " + path("good.jsonl") + " " +
                path("good.jsonl") + " --bootstrap 200 --seed 3 --perspective Info --out " +
                path("self")).code, 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("self.json")))["significance"]["winner"], "tie");

  ASSERT_EQ(run("metaeval --corpus " + path("c.jsonl") + " --compare " + path("good.jsonl") + " " +
                path("rev.jsonl") + " --bootstrap 200 --seed 3 --workers 4 --perspective Info "
                "--out " + path("cmp")).code, 0);
  auto sig = nlohmann::json::parse(slurp(path("cmp.json")))["significance"];
  EXPECT_EQ(sig["winner"], "good");
  EXPECT_EQ(sig["p_value"].get<double>(), 0.0);
}

TEST_F(CliTest, MetaevalTopkMatchesLibrary) {
  write_judged(path("c.jsonl"), path("good.jsonl"), path("rev.jsonl"), 10, 5);
  // Blend judgments with noise so per-k values differ.
  auto corpus = load_corpus(path("c.jsonl"));
  MetricScoreTable noisy("noisy", "z");
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  for (const auto& inst : corpus.instances()) {
    for (const auto& o : inst.outputs) {
      noisy.insert({inst.instance_id, o.system_id}, *o.judgment(Perspective::kInfo) + d(rng));
    }
  }
  save_scores(noisy, path("noisy.jsonl"));
  ASSERT_EQ(run("metaeval --dataset d1=" + path("c.jsonl") + ":" + path("noisy.jsonl") +
                " --measure pearson --perspective Info --topk 2,3,5,7 --bias --out " +
                path("tk")).code, 0);
  auto report = nlohmann::json::parse(slurp(path("tk.json")));
  DatasetScores ds{"d1", &corpus, &noisy, {}};
  AgreementSpec spec;
  spec.measure = Measure::kPearson;
  spec.perspective = Perspective::kInfo;
  auto expected = topk_analysis({ds}, spec, {2, 3, 5, 7});
  ASSERT_EQ(report["topk"]["rows"].size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(report["topk"]["rows"][i]["mean_value"].get<double>(), expected.rows[i].mean_value);
  }
  EXPECT_EQ(report["topk"]["warnings"].size(), 1u);
  long total = 0;
  for (const auto& r : report["bias"]) total += r["difference"].get<long>();
  EXPECT_EQ(total, 0);
}

TEST_F(CliTest, PromptSearchSelectsBestPrompt) {
  // Same construction as the prompting unit test, serialized for the CLI:
  // under prompt P the table fixes each system's score.
  const std::vector<double> human = {1.0, 4.0, 2.0, 5.0, 3.0, 2.5};
  TableDefinition def;
  def.vocabulary = {"filler"};
  TextInstance inst{"dev1", "src", {}, {}};
  for (std::size_t k = 0; k < human.size(); ++k) {
    std::string tok = "h" + std::to_string(k);
    def.vocabulary.push_back(tok);
    inst.outputs.push_back({"sys" + std::to_string(k), tok, {{Perspective::kInfo, human[k]}}, {}});
    def.entries.push_back({std::nullopt, {tok}, {{"</s>", 1.0}}});
  }
  // P1 ranks systems like the humans; P2 reverses them.
  for (const auto& [prompt, sign] : std::vector<std::pair<std::string, double>>{{"P1", 1}, {"P2", -1}}) {
    TableEntry e{"src " + prompt, {}, {}};
    double used = 0;
    for (std::size_t k = 0; k < human.size(); ++k) {
      double p = std::exp(-6.0 + sign * 0.5 * human[k]);
      e.dist["h" + std::to_string(k)] = p;
      used += p;
    }
    e.dist["filler"] = 1.0 - used;
    def.entries.push_back(e);
  }
  std::ofstream(path("table.json")) << def.to_json().dump();
  save_corpus(Corpus({inst}), path("dev.jsonl"));
  std::ofstream(path("prompts.txt")) << "P2\nP1\n";

  ASSERT_EQ(run("prompt-search --corpus " + path("dev.jsonl") + " --backend table --backend-config " +
                path("table.json") + " --prompt-set " + path("prompts.txt") +
                " --prompt-position source-append --measure spearman --perspective Info --out " +
                path("ps")).code, 0);
  auto report = nlohmann::json::parse(slurp(path("ps.json")));
  EXPECT_EQ(report["selected"], "P1");
  EXPECT_EQ(report["ranking"][0]["value"].get<double>(), 1.0);
  EXPECT_EQ(report["ranking"][1]["value"].get<double>(), -1.0);
  EXPECT_NE(slurp(path("ps.csv")).find("1,P1,1,true"), std::string::npos);

  std::ofstream(path("empty.txt")) << "# nothing\n";
  EXPECT_EQ(run("prompt-search --corpus " + path("dev.jsonl") + " --backend table --backend-config " +
                path("table.json") + " --prompt-set " + path("empty.txt") +
                " --measure spearman --perspective Info --out " + path("ps2")).code, 3);
}

TEST_F(CliTest, DumpBuiltin) {
  auto s2h = run("prompt-search --dump-builtin s2h");
  EXPECT_EQ(s2h.code, 0);
  EXPECT_EQ(std::count(s2h.out.begin(), s2h.out.end(), '\n'), 70);
  auto h2r = run("prompt-search --dump-builtin h2r");
  EXPECT_EQ(std::count(h2r.out.begin(), h2r.out.end(), '\n'), 34);
  EXPECT_NE(h2r.out.find("Such as\n"), std::string::npos);
}

}  // namespace
}  // namespace genscore

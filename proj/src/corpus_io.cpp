#include "genscore/corpus_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <map>
#include <set>

#include <json.hpp>

#include "genscore/errors.hpp"

namespace genscore {
namespace {

using nlohmann::json;

class LineReader {
 public:
  LineReader(std::istream& in, std::string_view name) : in_(in), name_(name) {}

  // Skips blank lines. Returns false at end of input.
  bool next(json& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
      }
      if (!out.is_object()) fail("expected a JSON object");
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw DataError(std::string(name_) + ":" + std::to_string(line_no_) + ": " +
                    message);
  }

  std::string string_field(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    if (!it->is_string()) fail(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  }

  double real_field(const json& v, const std::string& what) const {
    if (!v.is_number()) fail(what + " must be a finite number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(what + " must be a finite number");
    return d;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string_view name_;
  std::size_t line_no_ = 0;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SystemOutput parse_output(const LineReader& reader, const json& obj) {
  if (!obj.is_object()) reader.fail("each output must be an object");
  SystemOutput out;
  out.system_id = reader.string_field(obj, "system_id");
  out.hypothesis = reader.string_field(obj, "hypothesis");
  auto it = obj.find("judgments");
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_object()) reader.fail("'judgments' must be an object");
  for (const auto& [label, value] : it->items()) {
    std::string what = "judgment '" + label + "' of system '" + out.system_id + "'";
    double v = reader.real_field(value, what);
    if (label.rfind(kExtraJudgmentPrefix, 0) == 0) {
      out.extra_judgments.emplace(label.substr(kExtraJudgmentPrefix.size()), v);
    } else if (auto p = parse_perspective(label)) {
      out.judgments.emplace(*p, v);
    } else {
      reader.fail("unknown perspective label '" + label + "'");
    }
  }
  return out;
}

}  // namespace

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

Corpus parse_corpus(std::istream& in, std::string_view name) {
  LineReader reader(in, name);
  std::vector<TextInstance> instances;
  std::map<std::string, std::size_t> first_seen;
  json obj;
  while (reader.next(obj)) {
    TextInstance inst;
    inst.instance_id = reader.string_field(obj, "instance_id");
    if (auto [it, fresh] = first_seen.emplace(inst.instance_id, reader.line_no());
        !fresh) {
      reader.fail("duplicate instance_id '" + inst.instance_id +
                  "' (first seen on line " + std::to_string(it->second) + ")");
    }
    inst.source = reader.string_field(obj, "source");
    if (auto refs = obj.find("references"); refs != obj.end() && !refs->is_null()) {
      if (!refs->is_array()) reader.fail("'references' must be an array");
      for (const auto& r : *refs) {
        if (!r.is_string()) reader.fail("references must be strings");
        inst.references.push_back(r.get<std::string>());
      }
    }
    if (auto outs = obj.find("outputs"); outs != obj.end() && !outs->is_null()) {
      if (!outs->is_array()) reader.fail("'outputs' must be an array");
      std::set<std::string> systems;
      for (const auto& o : *outs) {
        SystemOutput out = parse_output(reader, o);
        if (!systems.insert(out.system_id).second) {
          reader.fail("duplicate system_id '" + out.system_id + "'");
        }
        inst.outputs.push_back(std::move(out));
      }
    }
    instances.push_back(std::move(inst));
  }
  return Corpus(std::move(instances));
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& inst : corpus.instances()) {
    json obj = json::object();
    obj["instance_id"] = inst.instance_id;
    obj["source"] = inst.source;
    obj["references"] = inst.references;
    json outputs = json::array();
    for (const auto& o : inst.outputs) {
      json j = json::object();
      for (const auto& [p, v] : o.judgments) j[std::string(perspective_name(p))] = v;
      for (const auto& [k, v] : o.extra_judgments) {
        j[std::string(kExtraJudgmentPrefix) + k] = v;
      }
      outputs.push_back(
          {{"system_id", o.system_id}, {"hypothesis", o.hypothesis}, {"judgments", j}});
    }
    obj["outputs"] = std::move(outputs);
    out << obj.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_corpus(out, corpus);
  finish(out, path);
}

std::vector<PreferencePair> parse_preferences(std::istream& in, std::string_view name) {
  LineReader reader(in, name);
  std::vector<PreferencePair> pairs;
  json obj;
  while (reader.next(obj)) {
    PreferencePair p{reader.string_field(obj, "instance_id"),
                     reader.string_field(obj, "better_id"),
                     reader.string_field(obj, "worse_id")};
    if (p.better_id == p.worse_id) reader.fail("better_id equals worse_id");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<PreferencePair> load_preferences(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_preferences(in, path.string());
}

void save_preferences(const std::vector<PreferencePair>& pairs,
                      const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& p : pairs) {
    out << json{{"instance_id", p.instance_id},
                {"better_id", p.better_id},
                {"worse_id", p.worse_id}}
               .dump()
        << '\n';
  }
  finish(out, path);
}

MetricScoreTable parse_scores(std::istream& in, std::string_view name) {
  LineReader reader(in, name);
  json obj;
  if (!reader.next(obj)) reader.fail("missing header record");
  MetricScoreTable table(reader.string_field(obj, "metric_name"),
                         reader.string_field(obj, "config_digest"));
  while (reader.next(obj)) {
    auto score = obj.find("score");
    if (score == obj.end()) reader.fail("missing field 'score'");
    ScoreKey key{reader.string_field(obj, "instance_id"),
                 reader.string_field(obj, "system_id")};
    double v = reader.real_field(*score, "score");
    if (table.find(key.instance_id, key.system_id)) {
      reader.fail("duplicate score for (" + key.instance_id + ", " + key.system_id + ")");
    }
    table.insert(std::move(key), v);
  }
  return table;
}

MetricScoreTable load_scores(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_scores(in, path.string());
}

void write_scores(std::ostream& out, const MetricScoreTable& table) {
  out << "{\"metric_name\":" << json(table.metric_name()).dump()
      << ",\"config_digest\":" << json(table.config_digest()).dump() << "}\n";
  for (const auto& e : table.entries()) {
    out << "{\"instance_id\":" << json(e.key.instance_id).dump()
        << ",\"system_id\":" << json(e.key.system_id).dump()
        << ",\"score\":" << format_real(e.score) << "}\n";
  }
}

void save_scores(const MetricScoreTable& table, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_scores(out, table);
  finish(out, path);
}

}  // namespace genscore

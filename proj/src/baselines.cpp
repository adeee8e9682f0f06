#include "genscore/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "genscore/digest.hpp"
#include "genscore/errors.hpp"
#include "parallel.hpp"

namespace genscore {
namespace {

double f_measure(double p, double r, double beta = 1.0) {
  double b2 = beta * beta;
  double denom = b2 * p + r;
  return denom > 0.0 ? (1.0 + b2) * p * r / denom : 0.0;
}

std::size_t overlap(const NgramProfile& a, const NgramProfile& b) {
  std::size_t n = 0;
  for (const auto& [gram, count] : a.counts) {
    if (auto it = b.counts.find(gram); it != b.counts.end()) n += std::min(count, it->second);
  }
  return n;
}

PrfScore prf(std::size_t matched, std::size_t hyp_total, std::size_t ref_total) {
  PrfScore s;
  s.precision = hyp_total ? static_cast<double>(matched) / static_cast<double>(hyp_total) : 0.0;
  s.recall = ref_total ? static_cast<double>(matched) / static_cast<double>(ref_total) : 0.0;
  s.f1 = f_measure(s.precision, s.recall);
  return s;
}

template <class Fn>
PrfScore best_f1(std::span<const std::string> references, Fn&& score) {
  if (references.empty()) throw DataError("baseline metric needs at least one reference");
  PrfScore best = score(references[0]);
  for (std::size_t i = 1; i < references.size(); ++i) {
    PrfScore s = score(references[i]);
    if (s.f1 > best.f1) best = s;
  }
  return best;
}

// UTF-8 to code points; invalid bytes pass through as single units.
std::u32string code_points_without_space(std::string_view text) {
  std::u32string out;
  for (std::size_t i = 0; i < text.size();) {
    auto c = static_cast<unsigned char>(text[i]);
    char32_t cp = c;
    std::size_t len = 1;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    bool valid = len > 1 && i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      auto cont = static_cast<unsigned char>(text[i + k]);
      valid = (cont & 0xC0) == 0x80;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid) {
      len = 1;
      cp = c;
    }
    i += len;
    if (cp < 0x80 && std::isspace(static_cast<int>(cp))) continue;
    out.push_back(cp);
  }
  return out;
}

std::map<std::u32string, std::size_t> char_ngrams(const std::u32string& s, std::size_t n) {
  std::map<std::u32string, std::size_t> grams;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++grams[s.substr(i, n)];
  return grams;
}

}  // namespace

std::vector<std::string> baseline_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      current += ch;
    }
  }
  flush();
  return tokens;
}

NgramProfile NgramProfile::build(std::span<const std::string> tokens, std::size_t order) {
  if (order == 0) throw UsageError("n-gram order must be >= 1");
  NgramProfile p;
  p.order = order;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++p.counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                        tokens.begin() + static_cast<long>(i + order))];
    ++p.total;
  }
  return p;
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  if (matches.size() < other.matches.size()) {
    matches.resize(other.matches.size(), 0);
    totals.resize(other.totals.size(), 0);
  }
  for (std::size_t n = 0; n < other.matches.size(); ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_length += other.hyp_length;
  ref_length += other.ref_length;
  return *this;
}

BleuStats bleu_stats(std::span<const std::string> hypothesis, std::span<const Tokens> references,
                     std::size_t max_order) {
  if (references.empty()) throw DataError("BLEU needs at least one reference");
  if (max_order == 0) throw UsageError("BLEU max order must be >= 1");
  BleuStats stats;
  stats.hyp_length = hypothesis.size();
  // Closest reference length, shorter on ties.
  std::size_t best_diff = std::numeric_limits<std::size_t>::max();
  for (const auto& ref : references) {
    std::size_t diff = ref.size() > hypothesis.size() ? ref.size() - hypothesis.size()
                                                      : hypothesis.size() - ref.size();
    if (diff < best_diff || (diff == best_diff && ref.size() < stats.ref_length)) {
      best_diff = diff;
      stats.ref_length = ref.size();
    }
  }
  for (std::size_t n = 1; n <= max_order; ++n) {
    auto hyp = NgramProfile::build(hypothesis, n);
    std::map<std::vector<std::string>, std::size_t> max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : NgramProfile::build(ref, n).counts) {
        auto& m = max_ref[gram];
        m = std::max(m, count);
      }
    }
    std::size_t matched = 0;
    for (const auto& [gram, count] : hyp.counts) {
      if (auto it = max_ref.find(gram); it != max_ref.end()) matched += std::min(count, it->second);
    }
    stats.matches.push_back(matched);
    stats.totals.push_back(hyp.total);
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats, BleuSmoothing smoothing) {
  if (stats.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < stats.matches.size(); ++n) {
    double m = static_cast<double>(stats.matches[n]);
    double t = static_cast<double>(stats.totals[n]);
    if (stats.matches[n] == 0) {
      if (smoothing == BleuSmoothing::kAddOne && n > 0) {
        m = 1.0;
        t += 1.0;
      } else {
        return 0.0;
      }
    }
    log_sum += std::log(m / t);
  }
  double c = static_cast<double>(stats.hyp_length);
  double r = static_cast<double>(stats.ref_length);
  double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  double bleu = bp * std::exp(log_sum / static_cast<double>(stats.matches.size()));
  return std::clamp(bleu, 0.0, 1.0);
}

double sentence_bleu(std::string_view hypothesis, std::span<const std::string> references,
                     std::size_t max_order, BleuSmoothing smoothing) {
  std::vector<Tokens> refs;
  for (const auto& r : references) refs.push_back(baseline_tokenize(r));
  return bleu_from_stats(bleu_stats(baseline_tokenize(hypothesis), refs, max_order), smoothing);
}

double corpus_bleu(std::span<const std::pair<std::string, std::vector<std::string>>> segments,
                   std::size_t max_order) {
  BleuStats total;
  for (const auto& [hyp, refs] : segments) {
    std::vector<Tokens> ref_tokens;
    for (const auto& r : refs) ref_tokens.push_back(baseline_tokenize(r));
    total += bleu_stats(baseline_tokenize(hyp), ref_tokens, max_order);
  }
  return bleu_from_stats(total, BleuSmoothing::kNone);
}

PrfScore rouge_n(std::string_view hypothesis, std::string_view reference, std::size_t n) {
  auto hyp = NgramProfile::build(baseline_tokenize(hypothesis), n);
  auto ref = NgramProfile::build(baseline_tokenize(reference), n);
  return prf(overlap(hyp, ref), hyp.total, ref.total);
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrfScore rouge_l(std::string_view hypothesis, std::string_view reference) {
  auto hyp = baseline_tokenize(hypothesis);
  auto ref = baseline_tokenize(reference);
  return prf(lcs_length(hyp, ref), hyp.size(), ref.size());
}

PrfScore rouge_n_multi(std::string_view hypothesis, std::span<const std::string> references,
                       std::size_t n) {
  return best_f1(references, [&](const std::string& r) { return rouge_n(hypothesis, r, n); });
}

PrfScore rouge_l_multi(std::string_view hypothesis, std::span<const std::string> references) {
  return best_f1(references, [&](const std::string& r) { return rouge_l(hypothesis, r); });
}

double chrf(std::string_view hypothesis, std::string_view reference, std::size_t char_order,
            double beta) {
  if (char_order == 0) throw UsageError("chrF order must be >= 1");
  auto hyp = code_points_without_space(hypothesis);
  auto ref = code_points_without_space(reference);
  double sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= char_order; ++n) {
    auto h = char_ngrams(hyp, n);
    auto r = char_ngrams(ref, n);
    if (h.empty() && r.empty()) continue;
    ++orders;
    if (h.empty() || r.empty()) continue;  // F = 0
    std::size_t matched = 0, h_total = 0, r_total = 0;
    for (const auto& [g, c] : h) {
      h_total += c;
      if (auto it = r.find(g); it != r.end()) matched += std::min(c, it->second);
    }
    for (const auto& [g, c] : r) r_total += c;
    sum += f_measure(static_cast<double>(matched) / static_cast<double>(h_total),
                     static_cast<double>(matched) / static_cast<double>(r_total), beta);
  }
  return orders ? std::clamp(sum / static_cast<double>(orders), 0.0, 1.0) : 0.0;
}

std::string_view baseline_name(BaselineMetric m) {
  switch (m) {
    case BaselineMetric::kBleu: return "bleu";
    case BaselineMetric::kRouge1: return "rouge1";
    case BaselineMetric::kRouge2: return "rouge2";
    case BaselineMetric::kRougeL: return "rougeL";
    case BaselineMetric::kChrf: return "chrf";
  }
  return "?";
}

std::optional<BaselineMetric> parse_baseline(std::string_view name) {
  for (auto m : {BaselineMetric::kBleu, BaselineMetric::kRouge1, BaselineMetric::kRouge2,
                 BaselineMetric::kRougeL, BaselineMetric::kChrf}) {
    if (baseline_name(m) == name) return m;
  }
  return std::nullopt;
}

double baseline_score(BaselineMetric metric, std::string_view hypothesis,
                      std::span<const std::string> references) {
  if (references.empty()) throw DataError("baseline metric needs at least one reference");
  switch (metric) {
    case BaselineMetric::kBleu: {
      // Max over single-reference scores: with pooled references a new,
      // closer-length reference can shrink the brevity penalty.
      double best = 0.0;
      for (const auto& r : references) {
        best = std::max(best, sentence_bleu(hypothesis, std::span<const std::string>(&r, 1)));
      }
      return best;
    }
    case BaselineMetric::kRouge1: return rouge_n_multi(hypothesis, references, 1).f1;
    case BaselineMetric::kRouge2: return rouge_n_multi(hypothesis, references, 2).f1;
    case BaselineMetric::kRougeL: return rouge_l_multi(hypothesis, references).f1;
    case BaselineMetric::kChrf: {
      double best = 0.0;
      for (const auto& r : references) best = std::max(best, chrf(hypothesis, r));
      return best;
    }
  }
  return 0.0;
}

MetricScoreTable score_corpus_baseline(const Corpus& corpus, BaselineMetric metric,
                                       std::size_t workers, bool skip_errors) {
  struct Job {
    const TextInstance* instance;
    const SystemOutput* output;
  };
  std::vector<Job> jobs;
  for (const auto& inst : corpus.instances()) {
    for (const auto& out : inst.outputs) jobs.push_back({&inst, &out});
  }
  std::vector<std::optional<double>> results(jobs.size());
  detail::parallel_for(jobs.size(), workers, [&](std::size_t i) {
    try {
      results[i] = baseline_score(metric, jobs[i].output->hypothesis, jobs[i].instance->references);
    } catch (const DataError& e) {
      if (!skip_errors) {
        throw DataError("(" + jobs[i].instance->instance_id + ", " + jobs[i].output->system_id +
                        "): " + e.what());
      }
    }
  });
  std::string config = std::string("{\"baseline\":\"") + std::string(baseline_name(metric)) +
                       "\",\"tokenizer\":\"whitespace+punct-v1\",\"bleu\":{\"max_order\":4,"
                       "\"smoothing\":\"add-one\"},\"chrf\":{\"order\":6,\"beta\":2}}";
  MetricScoreTable table(std::string(baseline_name(metric)), "sha256:" + sha256_hex(config));
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (results[i]) {
      table.insert({jobs[i].instance->instance_id, jobs[i].output->system_id}, *results[i]);
    }
  }
  return table;
}

}  // namespace genscore

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grw/corpus.hpp"
#include "grw/error.hpp"
#include "grw/rouge.hpp"

namespace grw {

using Words = std::vector<std::string>;

// All sentences of a summary (or document) as one word sequence.
inline Words join_words(std::span<const std::string> sentences) {
  Words out;
  for (const auto& s : sentences) {
    auto w = split_words(s);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

struct SampleRouge {
  std::string id;
  RougeScore r1, r2, rl;
};

struct CorpusRouge {
  std::vector<SampleRouge> samples;
  double r1 = 0, r2 = 0, rl = 0;  // mean F1
};

struct TextSample {
  std::string id;
  std::vector<std::string> sentences;
};

// Outputs and references must list the same ids in the same order.
inline CorpusRouge corpus_rouge(std::span<const TextSample> outputs,
                                std::span<const TextSample> references) {
  if (outputs.size() != references.size())
    throw Error("corpus_rouge: " + std::to_string(outputs.size()) + " outputs vs " +
                std::to_string(references.size()) + " references");
  CorpusRouge report;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i].id != references[i].id)
      throw Error("corpus_rouge: id mismatch at row " + std::to_string(i) + ": " + outputs[i].id +
                  " vs " + references[i].id);
    const auto cand = join_words(outputs[i].sentences);
    const auto ref = join_words(references[i].sentences);
    SampleRouge s{outputs[i].id, rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
    report.r1 += s.r1.f1;
    report.r2 += s.r2.f1;
    report.rl += s.rl.f1;
    report.samples.push_back(std::move(s));
  }
  if (!report.samples.empty()) {
    const double n = double(report.samples.size());
    report.r1 /= n;
    report.r2 /= n;
    report.rl /= n;
  }
  return report;
}

// Share of summary n-gram occurrences absent from the document, in percent.
// Returns -1 when the summary is shorter than n.
inline double novel_ngram_pct(const Words& summary, const Words& document, std::size_t n) {
  if (n == 0) throw Error("novel_ngram_pct: n must be >= 1");
  if (summary.size() < n) return -1;
  const auto doc = ngram_counts(document, n);
  std::size_t novel = 0, total = 0;
  for (std::size_t i = 0; i + n <= summary.size(); ++i, ++total)
    if (!doc.count(Words(summary.begin() + i, summary.begin() + i + n))) ++novel;
  return 100.0 * double(novel) / double(total);
}

// Mean over samples that have at least one n-gram.
inline double novel_ngram_pct(std::span<const Words> summaries, std::span<const Words> documents,
                              std::size_t n) {
  if (summaries.size() != documents.size())
    throw Error("novel_ngram_pct: summaries and documents differ in count");
  double sum = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const double p = novel_ngram_pct(summaries[i], documents[i], n);
    if (p < 0) continue;
    sum += p;
    ++counted;
  }
  return counted ? sum / double(counted) : 0.0;
}

enum class EditCategory { unchanged, compressed, rewritten };

inline const char* to_string(EditCategory c) {
  switch (c) {
    case EditCategory::unchanged: return "unchanged";
    case EditCategory::compressed: return "compressed";
    case EditCategory::rewritten: return "rewritten";
  }
  return "?";
}

enum class EditOp { keep, substitute, insert, remove };

// Word-level Levenshtein alignment with unit costs. The backtrace prefers the
// diagonal, then deletion, then insertion, which keeps the alignment leftmost.
inline std::vector<EditOp> edit_script(const Words& source, const Words& target) {
  const std::size_t n = source.size(), m = target.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (source[i - 1] == target[j - 1] ? 0 : 1), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (source[i - 1] == target[j - 1] ? 0 : 1)) {
      ops.push_back(source[i - 1] == target[j - 1] ? EditOp::keep : EditOp::substitute);
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ops.push_back(EditOp::remove);
      --i;
    } else {
      ops.push_back(EditOp::insert);
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

inline EditCategory edit_categorize(const Words& source, const Words& rewritten) {
  bool removed = false;
  for (EditOp op : edit_script(source, rewritten)) {
    if (op == EditOp::insert || op == EditOp::substitute) return EditCategory::rewritten;
    if (op == EditOp::remove) removed = true;
  }
  return removed ? EditCategory::compressed : EditCategory::unchanged;
}

struct CategoryFractions {
  double unchanged = 0, compressed = 0, rewritten = 0;  // percent
  std::size_t total = 0;
};

inline CategoryFractions category_fractions(std::span<const EditCategory> cats) {
  CategoryFractions f;
  f.total = cats.size();
  if (cats.empty()) return f;
  for (auto c : cats) {
    if (c == EditCategory::unchanged) f.unchanged += 1;
    else if (c == EditCategory::compressed) f.compressed += 1;
    else f.rewritten += 1;
  }
  const double n = double(cats.size());
  f.unchanged *= 100.0 / n;
  f.compressed *= 100.0 / n;
  f.rewritten *= 100.0 / n;
  return f;
}

// Sentences are joined with a boundary token, matching what the decoder
// sees, so trigrams spanning a sentence break are counted as well.
inline Words summary_stream(std::span<const std::string> sentences) {
  Words out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i > 0) out.emplace_back(special::surfaces[special::sep]);
    auto w = split_words(sentences[i]);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

inline std::size_t repeated_trigram_types(const Words& tokens) {
  std::size_t repeated = 0;
  for (const auto& [gram, count] : ngram_counts(tokens, 3))
    if (count >= 2) ++repeated;
  return repeated;
}

struct RedundancyReport {
  std::vector<std::size_t> repeats;  // per summary
  std::size_t total_repeats = 0;
  double summary_rate = 0;  // share of summaries with at least one repeat
  double mean_repeats = 0;
};

inline RedundancyReport redundancy_report(std::span<const Words> summaries) {
  RedundancyReport r;
  std::size_t with_repeat = 0;
  for (const auto& s : summaries) {
    const auto k = repeated_trigram_types(s);
    r.repeats.push_back(k);
    r.total_repeats += k;
    with_repeat += k > 0;
  }
  if (!summaries.empty()) {
    r.summary_rate = double(with_repeat) / double(summaries.size());
    r.mean_repeats = double(r.total_repeats) / double(summaries.size());
  }
  return r;
}

inline double length_stats(std::span<const std::string> summaries) {
  if (summaries.empty()) return 0;
  std::size_t words = 0;
  for (const auto& s : summaries) {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size()) ++words;
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
  }
  return double(words) / double(summaries.size());
}

// One analysed sample: the generated summary, the reference, the source
// document, and (group, source sentence) pairs for edit categorization.
struct AnalysisSample {
  std::string id;
  std::vector<std::string> output;
  std::vector<std::string> reference;
  std::vector<std::string> document;
  std::vector<std::pair<std::size_t, std::size_t>> provenance;
};

struct AnalysisReport {
  std::vector<std::tuple<std::string, std::string, double>> rows;  // metric, name, value
  std::vector<nlohmann::json> details;
};

inline AnalysisReport analyze(std::span<const AnalysisSample> samples) {
  std::vector<TextSample> outs, refs;
  std::vector<Words> out_words, doc_words, streams;
  std::vector<std::string> joined;
  std::vector<EditCategory> cats;
  AnalysisReport report;
  for (const auto& s : samples) {
    outs.push_back({s.id, s.output});
    refs.push_back({s.id, s.reference});
    out_words.push_back(join_words(s.output));
    doc_words.push_back(join_words(s.document));
    streams.push_back(summary_stream(s.output));
    std::string j;
    for (const auto& sent : s.output) j += (j.empty() ? "" : " ") + sent;
    joined.push_back(j);
  }
  const auto rouge = corpus_rouge(outs, refs);
  const auto red = redundancy_report(streams);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    nlohmann::json d;
    d["id"] = s.id;
    d["rouge"] = {{"r1", rouge.samples[i].r1.f1}, {"r2", rouge.samples[i].r2.f1},
                  {"rl", rouge.samples[i].rl.f1}};
    for (std::size_t n = 1; n <= 3; ++n)
      d["novel_" + std::to_string(n)] = novel_ngram_pct(out_words[i], doc_words[i], n);
    d["repeated_trigrams"] = red.repeats[i];
    d["words"] = out_words[i].size();
    auto& dc = d["categories"] = nlohmann::json::array();
    for (const auto& [group, src] : s.provenance) {
      if (group < 1 || group > s.output.size() || src >= s.document.size())
        throw Error("analyze: sample " + s.id + " has provenance outside its sentences");
      const auto c = edit_categorize(split_words(s.document[src]), split_words(s.output[group - 1]));
      cats.push_back(c);
      dc.push_back(to_string(c));
    }
    report.details.push_back(std::move(d));
  }
  auto& rows = report.rows;
  rows.emplace_back("rouge", "r1", rouge.r1);
  rows.emplace_back("rouge", "r2", rouge.r2);
  rows.emplace_back("rouge", "rl", rouge.rl);
  for (std::size_t n = 1; n <= 3; ++n)
    rows.emplace_back("novel_ngram_pct", std::to_string(n), novel_ngram_pct(out_words, doc_words, n));
  const auto f = category_fractions(cats);
  rows.emplace_back("edit_category_pct", "unchanged", f.unchanged);
  rows.emplace_back("edit_category_pct", "compressed", f.compressed);
  rows.emplace_back("edit_category_pct", "rewritten", f.rewritten);
  rows.emplace_back("redundancy", "summary_rate", red.summary_rate);
  rows.emplace_back("redundancy", "mean_repeated_trigrams", red.mean_repeats);
  rows.emplace_back("length", "mean_words", length_stats(joined));
  rows.emplace_back("count", "samples", double(samples.size()));
  return report;
}

inline void write_report(const AnalysisReport& report, const std::string& csv_path,
                         const std::string& details_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error("cannot write " + csv_path);
  csv << "metric,name,value\n";
  csv.precision(10);
  for (const auto& [metric, name, value] : report.rows) csv << metric << ',' << name << ',' << value << '\n';
  std::ofstream det(details_path);
  if (!det) throw Error("cannot write " + details_path);
  for (const auto& d : report.details) det << d.dump() << '\n';
}

}  // namespace grw

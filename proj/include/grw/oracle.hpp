#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grw/corpus.hpp"
#include "grw/error.hpp"
#include "grw/rouge.hpp"

namespace grw {

// indices[k] is the document sentence matched to summary sentence k.
struct Extraction {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool operator==(const Extraction&) const = default;
};

using SentenceLabels = std::vector<int>;

// Greedy per-summary-sentence matching without replacement. Each summary
// sentence, in order, takes the free document sentence with the highest
// oracle_score; ties go to the lowest document index.
inline Extraction label_extractions(std::span<const Sentence> document,
                                    std::span<const Sentence> summary) {
  if (document.empty() || summary.empty())
    throw Error("label_extractions: document and summary must be non-empty");
  if (summary.size() > document.size())
    throw Error("label_extractions: " + std::to_string(summary.size()) +
                " summary sentences but only " + std::to_string(document.size()) +
                " document sentences");
  std::vector<bool> taken(document.size(), false);
  Extraction e;
  for (const auto& target : summary) {
    std::size_t best = document.size();
    double best_score = -1;
    for (std::size_t i = 0; i < document.size(); ++i) {
      if (taken[i]) continue;
      const double s = oracle_score(document[i].words, target.words);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    taken[best] = true;
    e.indices.push_back(best);
  }
  return e;
}

inline Extraction label_extractions(const SummarySample& sample) {
  return label_extractions(sample.document, sample.summary);
}

inline SentenceLabels extraction_to_labels(const Extraction& extraction,
                                           std::size_t num_doc_sentences) {
  SentenceLabels labels(num_doc_sentences, 0);
  for (std::size_t i : extraction.indices) {
    if (i >= num_doc_sentences)
      throw Error("extraction index " + std::to_string(i) + " outside document of " +
                  std::to_string(num_doc_sentences) + " sentences");
    labels[i] = 1;
  }
  return labels;
}

}  // namespace grw

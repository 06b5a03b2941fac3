#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "grw/corpus.hpp"
#include "grw/error.hpp"
#include "grw/oracle.hpp"

namespace grw {

struct GroupTags {
  std::vector<GroupTag> tags;
  std::size_t num_groups = 0;
};

// Per-sentence source tags: sentence extraction[k-1] gets tag k, all others 0.
// The order of `extraction` decides which group each sentence forms.
inline std::vector<GroupTag> tag_source(std::size_t num_doc_sentences,
                                        const Extraction& extraction) {
  if (extraction.size() == 0) throw Error("tag_source: extraction is empty");
  std::vector<GroupTag> tags(num_doc_sentences, 0);
  for (std::size_t k = 0; k < extraction.size(); ++k) {
    const std::size_t i = extraction.indices[k];
    if (i >= num_doc_sentences)
      throw Error("tag_source: sentence index " + std::to_string(i) + " outside document of " +
                  std::to_string(num_doc_sentences));
    if (tags[i] != 0) throw Error("tag_source: sentence " + std::to_string(i) + " extracted twice");
    tags[i] = k + 1;
  }
  return tags;
}

inline std::vector<GroupTag> tag_source(std::span<const Sentence> doc, const Extraction& extraction) {
  return tag_source(doc.size(), extraction);
}

inline GroupTags tag_target(std::span<const Sentence> summary) {
  return {assemble_decoder_sequence(summary).group_tags, summary.size()};
}

// Tag of the next decoder input: 1 after BOS, +1 after every SEP, saturating
// at max_groups when given.
inline GroupTag decode_tag_schedule(std::span<const TokenId> previous,
                                    std::optional<std::size_t> max_groups = std::nullopt) {
  const auto seps = static_cast<std::size_t>(std::count(previous.begin(), previous.end(), special::sep));
  GroupTag tag = 1 + seps;
  if (max_groups && *max_groups >= 1) tag = std::min(tag, *max_groups);
  return tag;
}

// Tags for every position of a decoder input prefix (BOS first).
inline std::vector<GroupTag> decoder_input_tags(std::span<const TokenId> tokens,
                                                std::optional<std::size_t> max_groups = std::nullopt) {
  std::vector<GroupTag> tags;
  tags.reserve(tokens.size());
  for (std::size_t j = 0; j < tokens.size(); ++j)
    tags.push_back(j == 0 ? GroupTag{1} : decode_tag_schedule(tokens.first(j), max_groups));
  return tags;
}

}  // namespace grw

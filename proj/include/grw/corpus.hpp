#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "grw/error.hpp"

namespace grw {

using TokenId = std::size_t;
using GroupTag = std::size_t;

// Reserved ids; every vocabulary starts with these in this order.
namespace special {
inline constexpr TokenId pad = 0;
inline constexpr TokenId unk = 1;
inline constexpr TokenId cls = 2;
inline constexpr TokenId sep = 3;
inline constexpr TokenId bos = 4;
inline constexpr TokenId eos = 5;
inline constexpr std::size_t count = 6;
inline constexpr std::array<std::string_view, count> surfaces = {"[PAD]", "[UNK]", "[CLS]",
                                                                 "[SEP]", "[BOS]", "[EOS]"};
}  // namespace special

inline bool is_special(TokenId id) { return id < special::count; }

class Vocab {
 public:
  Vocab() {
    for (auto s : special::surfaces) push(std::string(s));
  }

  std::size_t size() const { return surfaces_.size(); }

  TokenId lookup(std::string_view surface) const {
    auto it = ids_.find(std::string(surface));
    return it == ids_.end() ? special::unk : it->second;
  }

  const std::string& surface(TokenId id) const {
    if (id >= surfaces_.size()) throw Error("token id " + std::to_string(id) + " outside vocab");
    return surfaces_[id];
  }

  bool contains(std::string_view surface) const { return ids_.count(std::string(surface)) > 0; }

  // Appends a non-special surface; returns its id (existing id if present).
  TokenId add(const std::string& surface) {
    if (auto it = ids_.find(surface); it != ids_.end()) return it->second;
    return push(surface);
  }

  // One surface per line, line number (0-based) = id.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write vocab file " + path);
    for (const auto& s : surfaces_) out << s << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read vocab file " + path);
    Vocab v;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      if (n < special::count) {
        if (line != special::surfaces[n])
          throw ParseError(n + 1, "expected reserved token " + std::string(special::surfaces[n]));
      } else {
        if (v.contains(line)) throw ParseError(n + 1, "duplicate vocab entry '" + line + "'");
        v.push(line);
      }
      ++n;
    }
    if (n < special::count) throw Error("vocab file " + path + " lacks reserved tokens");
    return v;
  }

 private:
  TokenId push(std::string s) {
    const TokenId id = surfaces_.size();
    ids_.emplace(s, id);
    surfaces_.push_back(std::move(s));
    return id;
  }

  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::string> surfaces_;
};

struct Sentence {
  std::vector<TokenId> ids;
  std::vector<std::string> words;  // lowercased surface tokens, parallel to ids
  std::string text;
};

// Sample as read from disk, before vocabulary mapping.
struct RawSample {
  std::string id;
  std::vector<std::string> document;
  std::vector<std::string> summary;
  std::optional<std::vector<std::size_t>> extraction;
};

struct SummarySample {
  std::string id;
  std::vector<Sentence> document;
  std::vector<Sentence> summary;
  std::optional<std::vector<std::size_t>> extraction;
};

// Lowercase; split on whitespace; every ASCII punctuation character is its own token.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return words;
}

inline Sentence tokenize(std::string_view text, const Vocab& vocab) {
  Sentence s;
  s.text = std::string(text);
  s.words = split_words(text);
  s.ids.reserve(s.words.size());
  for (const auto& w : s.words) s.ids.push_back(vocab.lookup(w));
  return s;
}

// Specials take the lowest ids; remaining slots go to the most frequent
// words with count >= min_freq, ties broken lexicographically.
inline Vocab build_vocab(std::span<const RawSample> samples, std::size_t max_size,
                         std::size_t min_freq = 1) {
  if (samples.empty()) throw IngestionError("build_vocab: empty sample stream");
  if (max_size <= special::count)
    throw IngestionError("build_vocab: max_size must exceed the " +
                         std::to_string(special::count) + " reserved tokens");
  std::map<std::string, std::size_t> counts;
  auto count_all = [&](const std::vector<std::string>& sentences) {
    for (const auto& s : sentences)
      for (auto& w : split_words(s)) ++counts[w];
  };
  for (const auto& s : samples) {
    count_all(s.document);
    count_all(s.summary);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : counts)
    if (c >= min_freq) ranked.emplace_back(w, c);
  // std::map iteration is lexicographic, so a stable sort by count keeps that tie order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab vocab;
  for (const auto& [w, c] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.add(w);
  }
  return vocab;
}

// Encoder input: per sentence [CLS, tokens..., SEP].
struct EncodedInput {
  std::vector<TokenId> token_ids;
  std::vector<std::size_t> segment_ids;
  std::vector<std::size_t> cls_positions;
  std::vector<GroupTag> group_tags;

  std::size_t size() const { return token_ids.size(); }
  std::size_t num_sentences() const { return cls_positions.size(); }
};

// Sentences that do not fit completely within max_positions are dropped,
// together with everything after them.
inline EncodedInput assemble_encoder_input(std::span<const Sentence> doc,
                                           std::span<const GroupTag> tags,
                                           std::size_t max_positions) {
  if (doc.empty()) throw Error("assemble_encoder_input: empty document");
  if (tags.size() != doc.size())
    throw Error("assemble_encoder_input: " + std::to_string(tags.size()) + " tags for " +
                std::to_string(doc.size()) + " sentences");
  EncodedInput in;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::size_t span = doc[i].ids.size() + 2;
    if (in.size() + span > max_positions) {
      if (i == 0)
        throw Error("assemble_encoder_input: first sentence needs " + std::to_string(span) +
                    " positions, limit is " + std::to_string(max_positions));
      break;
    }
    in.cls_positions.push_back(in.size());
    in.token_ids.push_back(special::cls);
    in.token_ids.insert(in.token_ids.end(), doc[i].ids.begin(), doc[i].ids.end());
    in.token_ids.push_back(special::sep);
    in.segment_ids.insert(in.segment_ids.end(), span, i % 2);
    in.group_tags.insert(in.group_tags.end(), span, tags[i]);
  }
  return in;
}

// Target side: [BOS, s1..., SEP, s2..., SEP, ..., sK..., EOS]. Tokens of
// sentence k (and the SEP closing it) carry tag k; BOS carries 1, EOS carries K.
struct DecoderSequence {
  std::vector<TokenId> token_ids;
  std::vector<GroupTag> group_tags;
};

inline DecoderSequence assemble_decoder_sequence(std::span<const Sentence> summary) {
  if (summary.empty()) throw Error("assemble_decoder_sequence: empty summary");
  DecoderSequence seq;
  seq.token_ids.push_back(special::bos);
  seq.group_tags.push_back(1);
  for (std::size_t k = 0; k < summary.size(); ++k) {
    const GroupTag tag = k + 1;
    for (TokenId id : summary[k].ids) {
      seq.token_ids.push_back(id);
      seq.group_tags.push_back(tag);
    }
    seq.token_ids.push_back(k + 1 == summary.size() ? special::eos : special::sep);
    seq.group_tags.push_back(tag);
  }
  return seq;
}

// Splits generated ids on SEP, dropping BOS/EOS (and anything after EOS).
inline std::vector<std::vector<TokenId>> split_sentences(std::span<const TokenId> ids) {
  std::vector<std::vector<TokenId>> out(1);
  for (TokenId id : ids) {
    if (id == special::bos) continue;
    if (id == special::eos) break;
    if (id == special::sep)
      out.emplace_back();
    else
      out.back().push_back(id);
  }
  if (out.back().empty() && out.size() > 1) out.pop_back();
  return out;
}

// Streams RawSamples from a JSONL file. Blank lines are skipped.
class JsonlReader {
 public:
  explicit JsonlReader(const std::string& path, bool require_summary = true)
      : in_(path), require_summary_(require_summary) {
    if (!in_) throw IngestionError("cannot open " + path);
  }

  std::optional<RawSample> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return parse(line);
    }
    return std::nullopt;
  }

  std::size_t line() const { return line_; }

 private:
  RawSample parse(const std::string& line) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_, "expected a JSON object");
    RawSample s;
    try {
      if (!j.contains("id")) throw ParseError(line_, "missing field \"id\"");
      s.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      if (!j.contains("document")) throw ParseError(line_, "missing field \"document\"");
      s.document = j.at("document").get<std::vector<std::string>>();
      if (j.contains("summary"))
        s.summary = j.at("summary").get<std::vector<std::string>>();
      else if (require_summary_)
        throw ParseError(line_, "missing field \"summary\"");
      if (j.contains("extraction"))
        s.extraction = j.at("extraction").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_, std::string("bad field type: ") + e.what());
    }
    if (s.document.empty()) throw ParseError(line_, "empty document");
    if (require_summary_ && s.summary.empty()) throw ParseError(line_, "empty summary");
    return s;
  }

  std::ifstream in_;
  bool require_summary_;
  std::size_t line_ = 0;
};

inline std::vector<RawSample> read_raw_jsonl(const std::string& path, bool require_summary = true) {
  JsonlReader reader(path, require_summary);
  std::vector<RawSample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

// Tokenizes a raw sample; an empty sentence is an error reported against `line`.
inline SummarySample to_sample(const RawSample& raw, const Vocab& vocab, std::size_t line = 0) {
  SummarySample s;
  s.id = raw.id;
  s.extraction = raw.extraction;
  auto convert = [&](const std::vector<std::string>& in, std::vector<Sentence>& out) {
    for (const auto& text : in) {
      out.push_back(tokenize(text, vocab));
      if (out.back().ids.empty()) throw ParseError(line, "empty sentence in sample " + raw.id);
    }
  };
  convert(raw.document, s.document);
  convert(raw.summary, s.summary);
  return s;
}

// Lazily yields tokenized samples.
class SampleStream {
 public:
  SampleStream(const std::string& path, const Vocab& vocab, bool require_summary = true)
      : reader_(path, require_summary), vocab_(&vocab) {}

  std::optional<SummarySample> next() {
    auto raw = reader_.next();
    if (!raw) return std::nullopt;
    return to_sample(*raw, *vocab_, reader_.line());
  }

 private:
  JsonlReader reader_;
  const Vocab* vocab_;
};

inline SampleStream load_jsonl(const std::string& path, const Vocab& vocab) {
  return SampleStream(path, vocab);
}

inline nlohmann::json to_json(const RawSample& s) {
  nlohmann::json j = {{"id", s.id}, {"document", s.document}, {"summary", s.summary}};
  if (s.extraction) j["extraction"] = *s.extraction;
  return j;
}

}  // namespace grw

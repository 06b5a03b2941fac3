#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "grw/error.hpp"
#include "grw/inference.hpp"
#include "grw/training.hpp"
#include "grw/transformer.hpp"

namespace grw {

struct Config {
  ModelConfig model;
  TrainConfig train;
  SelectionPolicy policy;
  BeamParams beam;
  std::size_t vocab_max = 30000;
  std::size_t vocab_min_freq = 1;
  std::size_t workers = 1;
  std::string vocab_path = "vocab.txt";
  std::string extractor_path = "extractor.ckpt";
  std::string rewriter_path = "rewriter.ckpt";
  std::string loss_log;  // empty: no loss log

  void validate() const {
    if (vocab_max <= special::count) throw ConfigError("vocab_max must exceed the reserved tokens");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    // vocab_size comes from the vocabulary file, so check the rest with a stand-in.
    ModelConfig m = model;
    if (m.vocab_size == 0) m.vocab_size = special::count + 1;
    try {
      m.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    train.validate();
    policy.validate();
    beam.validate();
  }
};

// size_t and uint64_t map onto these two on LP64 and LLP64 alike.
using ConfigSlot = std::variant<unsigned long*, unsigned long long*, double*, bool*, std::string*>;

struct ConfigKey {
  std::string_view name;
  ConfigSlot slot;
};

inline std::vector<ConfigKey> config_keys(Config& c) {
  return {
      {"d_model", &c.model.d_model},
      {"heads", &c.model.heads},
      {"encoder_layers", &c.model.encoder_layers},
      {"extractor_layers", &c.model.extractor_layers},
      {"decoder_layers", &c.model.decoder_layers},
      {"d_ff", &c.model.d_ff},
      {"max_positions", &c.model.max_positions},
      {"max_groups", &c.model.max_groups},
      {"model_dropout", &c.model.dropout},
      {"use_group_tags", &c.model.use_group_tags},
      {"steps", &c.train.steps},
      {"batch_size", &c.train.batch_size},
      {"ext_lr", &c.train.ext_lr},
      {"ext_warmup", &c.train.ext_warmup},
      {"lr_enc", &c.train.lr_enc},
      {"warmup_enc", &c.train.warmup_enc},
      {"lr_dec", &c.train.lr_dec},
      {"warmup_dec", &c.train.warmup_dec},
      {"label_smoothing", &c.train.label_smoothing},
      {"word_dropout", &c.train.word_dropout},
      {"dropout", &c.train.dropout},
      {"clip_norm", &c.train.clip_norm},
      {"seed", &c.train.seed},
      {"checkpoint_every", &c.train.checkpoint_every},
      {"min_sel", &c.policy.min_sel},
      {"max_sel", &c.policy.max_sel},
      {"threshold", &c.policy.threshold},
      {"beam_size", &c.beam.beam_size},
      {"min_length", &c.beam.min_length},
      {"max_length", &c.beam.max_length},
      {"alpha", &c.beam.alpha},
      {"trigram_blocking", &c.beam.trigram_blocking},
      {"vocab_max", &c.vocab_max},
      {"vocab_min_freq", &c.vocab_min_freq},
      {"workers", &c.workers},
      {"vocab_path", &c.vocab_path},
      {"extractor_path", &c.extractor_path},
      {"rewriter_path", &c.rewriter_path},
      {"loss_log", &c.loss_log},
  };
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

inline void assign(const ConfigKey& key, std::string_view value) {
  const auto bad = [&](const char* type) {
    return ConfigError("config key '" + std::string(key.name) + "' expects " + type + ", got '" +
                       std::string(value) + "'");
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") *p = true;
          else if (value == "false" || value == "0") *p = false;
          else throw bad("true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = std::string(value);
        } else if constexpr (std::is_same_v<T, double>) {
          if (!parse_number(value, *p)) throw bad("a number");
        } else {
          if (!parse_number(value, *p)) throw bad("a non-negative integer");
        }
      },
      key.slot);
}

}  // namespace detail

// Applies one "key=value" assignment.
inline void set_config_value(Config& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("config entry '" + std::string(assignment) + "' is not key=value");
  const auto name = detail::trim(assignment.substr(0, eq));
  const auto value = detail::trim(assignment.substr(eq + 1));
  for (const auto& key : config_keys(config))
    if (key.name == name) return detail::assign(key, value);
  throw ConfigError("unknown config key '" + std::string(name) + "'");
}

// File lines are key = value; '#' starts a comment. Overrides apply after the
// file, then the whole config is validated.
inline Config parse_config(const std::string& path, std::span<const std::string> overrides = {}) {
  Config config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::string line;
    while (std::getline(in, line)) {
      auto body = detail::trim(std::string_view(line).substr(0, line.find('#')));
      if (!body.empty()) set_config_value(config, body);
    }
  }
  for (const auto& o : overrides) set_config_value(config, o);
  config.validate();
  return config;
}

inline std::string config_to_text(Config config) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& key : config_keys(config)) {
    out << key.name << " = ";
    std::visit(
        [&](auto* p) {
          if constexpr (std::is_same_v<std::remove_pointer_t<decltype(p)>, bool>)
            out << (*p ? "true" : "false");
          else
            out << *p;
        },
        key.slot);
    out << '\n';
  }
  return out.str();
}

}  // namespace grw

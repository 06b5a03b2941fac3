// grw: command-line front end for labeling, training, decoding and analysis.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grw/analysis.hpp"
#include "grw/autodiff/gradcheck.hpp"
#include "grw/checkpoint.hpp"
#include "grw/config.hpp"
#include "grw/inference.hpp"
#include "grw/model_gradcheck.hpp"
#include "grw/synthetic.hpp"
#include "grw/training.hpp"

using namespace grw;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Real = float;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string vocab;
  bool no_trigram_blocking = false;
};

Config load_config(const Common& c) {
  Config cfg = parse_config(c.config_path, c.sets);
  if (c.seed) {
    cfg.train.seed = *c.seed;
  } else if (const char* env = std::getenv("GROUP_REWRITE_SEED"); env && *env) {
    set_config_value(cfg, std::string("seed=") + env);
  }
  if (c.workers) cfg.workers = *c.workers;
  if (!c.vocab.empty()) cfg.vocab_path = c.vocab;
  if (c.no_trigram_blocking) cfg.beam.trigram_blocking = false;
  cfg.validate();
  std::cerr << "# seed " << cfg.train.seed << "\n";
  return cfg;
}

// Runs f(i) for i in [0, n) on up to `workers` threads; rethrows the first error.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::ofstream open_out(const std::string& path) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

Vocab load_or_build_vocab(const Config& cfg, std::span<const RawSample> train) {
  if (fs::exists(cfg.vocab_path)) return Vocab::load(cfg.vocab_path);
  auto vocab = build_vocab(train, cfg.vocab_max, cfg.vocab_min_freq);
  vocab.save(cfg.vocab_path);
  std::cerr << "# wrote vocabulary of " << vocab.size() << " entries to " << cfg.vocab_path << "\n";
  return vocab;
}

std::vector<SummarySample> tokenize_all(std::span<const RawSample> raw, const Vocab& vocab) {
  std::vector<SummarySample> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(to_sample(r, vocab));
  return out;
}

ModelConfig model_config(const Config& cfg, const Vocab& vocab) {
  ModelConfig m = cfg.model;
  m.vocab_size = vocab.size();
  m.validate();
  return m;
}

json provenance_json(const RewriteOutput& out) {
  json p = json::object();
  for (const auto& [group, src] : out.provenance) p[std::to_string(group)] = src;
  return p;
}

json output_json(const std::string& id, const RewriteOutput& out) {
  json j = {{"id", id},
            {"summary", out.sentences},
            {"extraction", out.extraction.indices},
            {"provenance", provenance_json(out)}};
  if (out.unfinished_warning) j["unfinished"] = true;
  return j;
}

// Trains with optional best-dev tracking: the checkpoint on disk is the one
// with the lowest dev loss seen at checkpoint steps and at the end.
template <class Model, class Train, class DevLoss>
void run_training(Model& model, const Config& cfg, const std::string& path, bool have_dev, Train train,
                  DevLoss dev_loss) {
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](std::size_t step) {
    if (!have_dev) return;
    const double loss = dev_loss();
    std::cerr << "# step " << step << " dev loss " << loss << "\n";
    if (loss < best) {
      best = loss;
      save_checkpoint(model, path);
    }
  };
  TrainHooks hooks;
  hooks.on_checkpoint = consider;
  hooks.on_step = [&](const LossRecord& r) {
    if (r.step % 100 == 0) std::cerr << "# step " << r.step << " loss " << r.loss << "\n";
    return false;
  };
  const auto result = train(hooks);
  if (!cfg.loss_log.empty()) write_loss_log(cfg.loss_log, result.log);
  if (have_dev) {
    consider(result.steps_run);
  } else {
    save_checkpoint(model, path);
  }
  std::cerr << "# trained " << result.steps_run << " steps, checkpoint " << path << "\n";
}

void cmd_synth(const Common& common, std::size_t count, const std::string& out_path) {
  const auto cfg = load_config(common);
  auto out = open_out(out_path);
  for (const auto& s : gen_synthetic(count, cfg.train.seed)) out << to_json(s).dump() << '\n';
}

void cmd_oracle_label(const Common& common, const std::string& in, const std::string& out_path) {
  const auto cfg = load_config(common);
  auto raw = read_raw_jsonl(in);
  const Vocab words_only;  // labeling compares surface words, ids are unused
  parallel_for(raw.size(), cfg.workers, [&](std::size_t i) {
    const auto s = to_sample(raw[i], words_only, i + 1);
    raw[i].extraction = label_extractions(s).indices;
  });
  auto out = open_out(out_path);
  for (const auto& s : raw) out << to_json(s).dump() << '\n';
}

void cmd_train_extractor(const Common& common, const std::string& in, const std::string& dev) {
  const auto cfg = load_config(common);
  const auto raw = read_raw_jsonl(in);
  const auto vocab = load_or_build_vocab(cfg, raw);
  const auto train = tokenize_all(raw, vocab);
  const auto dev_set = dev.empty() ? std::vector<SummarySample>{} : tokenize_all(read_raw_jsonl(dev), vocab);
  auto mc = model_config(cfg, vocab);
  ExtractorModel<Real> model(mc, cfg.train.seed);
  run_training(
      model, cfg, cfg.extractor_path, !dev_set.empty(),
      [&](const TrainHooks& h) { return train_extractor(model, train, cfg.train, h); },
      [&] { return evaluate_extractor_loss(model, dev_set); });
}

void cmd_train_rewriter(const Common& common, const std::string& in, const std::string& dev) {
  const auto cfg = load_config(common);
  const auto raw = read_raw_jsonl(in);
  const auto vocab = load_or_build_vocab(cfg, raw);
  const auto train = tokenize_all(raw, vocab);
  const auto dev_set = dev.empty() ? std::vector<SummarySample>{} : tokenize_all(read_raw_jsonl(dev), vocab);
  auto mc = model_config(cfg, vocab);
  RewriterModel<Real> model(mc, cfg.train.seed);
  run_training(
      model, cfg, cfg.rewriter_path, !dev_set.empty(),
      [&](const TrainHooks& h) { return train_rewriter(model, train, cfg.train, h); },
      [&] { return evaluate_rewriter_loss(model, dev_set, cfg.train.label_smoothing); });
}

void cmd_extract(const Common& common, const std::string& in, const std::string& out_path) {
  const auto cfg = load_config(common);
  const auto vocab = Vocab::load(cfg.vocab_path);
  const auto model = load_checkpoint<ExtractorModel<Real>>(cfg.extractor_path);
  const auto raw = read_raw_jsonl(in, false);
  std::vector<json> rows(raw.size());
  parallel_for(raw.size(), cfg.workers, [&](std::size_t i) {
    const auto s = to_sample(raw[i], vocab, i + 1);
    const auto probs = extraction_probabilities(model, s.document);
    rows[i] = {{"id", s.id}, {"extraction", select_sentences(probs, cfg.policy)}, {"probabilities", probs}};
  });
  auto out = open_out(out_path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

void cmd_rewrite(const Common& common, const std::string& in, const std::string& out_path,
                 bool reverse_groups) {
  const auto cfg = load_config(common);
  const auto vocab = Vocab::load(cfg.vocab_path);
  const auto model = load_checkpoint<RewriterModel<Real>>(cfg.rewriter_path);
  const auto raw = read_raw_jsonl(in, false);
  std::vector<json> rows(raw.size());
  parallel_for(raw.size(), cfg.workers, [&](std::size_t i) {
    const auto s = to_sample(raw[i], vocab, i + 1);
    if (!s.extraction) throw Error("sample " + s.id + " has no extraction to rewrite");
    Extraction ext{*s.extraction};
    if (reverse_groups) std::reverse(ext.indices.begin(), ext.indices.end());
    rows[i] = output_json(s.id, rewrite_with_extraction(model, vocab, s.document, ext, cfg.beam));
  });
  auto out = open_out(out_path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

void cmd_pipeline(const Common& common, const std::string& in, const std::string& out_path) {
  const auto cfg = load_config(common);
  const auto vocab = Vocab::load(cfg.vocab_path);
  const auto extractor = load_checkpoint<ExtractorModel<Real>>(cfg.extractor_path);
  const auto rewriter = load_checkpoint<RewriterModel<Real>>(cfg.rewriter_path);
  const auto raw = read_raw_jsonl(in, false);
  std::vector<json> rows(raw.size());
  parallel_for(raw.size(), cfg.workers, [&](std::size_t i) {
    const auto s = to_sample(raw[i], vocab, i + 1);
    rows[i] = output_json(s.id, rewrite_pipeline(s.document, extractor, rewriter, vocab, cfg.policy, cfg.beam));
  });
  auto out = open_out(out_path);
  for (const auto& r : rows) out << r.dump() << '\n';
}

struct OutputRow {
  std::string id;
  std::vector<std::string> summary;
  std::vector<std::pair<std::size_t, std::size_t>> provenance;
};

std::vector<OutputRow> read_outputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<OutputRow> rows;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      OutputRow r;
      r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      r.summary = j.at("summary").get<std::vector<std::string>>();
      if (j.contains("provenance"))
        for (const auto& [group, src] : j.at("provenance").items())
          r.provenance.emplace_back(std::stoul(group), src.get<std::size_t>());
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(line_no, path + ": " + e.what());
    }
  }
  return rows;
}

// Pairs each output with its reference sample by id.
std::vector<std::pair<OutputRow, RawSample>> align(const std::string& outputs, const std::string& refs) {
  std::map<std::string, RawSample> by_id;
  for (auto& r : read_raw_jsonl(refs)) {
    const std::string id = r.id;
    if (!by_id.emplace(id, std::move(r)).second) throw Error("duplicate reference id " + id);
  }
  std::vector<std::pair<OutputRow, RawSample>> pairs;
  for (auto& o : read_outputs(outputs)) {
    const auto it = by_id.find(o.id);
    if (it == by_id.end()) throw Error("output id " + o.id + " has no reference");
    pairs.emplace_back(std::move(o), it->second);
  }
  return pairs;
}

void cmd_evaluate(const Common& common, const std::string& in, const std::string& ref, const std::string& out_path) {
  load_config(common);
  std::vector<TextSample> outs, refs;
  for (const auto& [o, r] : align(in, ref)) {
    outs.push_back({o.id, o.summary});
    refs.push_back({r.id, r.summary});
  }
  const auto rouge = corpus_rouge(outs, refs);
  std::cout << std::fixed << std::setprecision(4) << "samples " << outs.size() << "\nrouge1 " << rouge.r1
            << "\nrouge2 " << rouge.r2 << "\nrougeL " << rouge.rl << "\n";
  if (!out_path.empty()) {
    json per = json::array();
    for (const auto& s : rouge.samples)
      per.push_back({{"id", s.id}, {"r1", s.r1.f1}, {"r2", s.r2.f1}, {"rl", s.rl.f1}});
    json j = {{"samples", outs.size()}, {"r1", rouge.r1}, {"r2", rouge.r2}, {"rl", rouge.rl}, {"per_sample", per}};
    open_out(out_path) << j.dump(2) << '\n';
  }
}

void cmd_analyze(const Common& common, const std::string& in, const std::string& ref, const std::string& out_dir) {
  load_config(common);
  std::vector<AnalysisSample> samples;
  for (auto& [o, r] : align(in, ref))
    samples.push_back({o.id, o.summary, r.summary, r.document, o.provenance});
  const auto report = analyze(samples);
  fs::create_directories(out_dir);
  write_report(report, (fs::path(out_dir) / "report.csv").string(),
               (fs::path(out_dir) / "details.jsonl").string());
  for (const auto& [metric, name, value] : report.rows)
    std::cout << std::left << std::setw(20) << metric << std::setw(26) << name << std::fixed
              << std::setprecision(4) << value << "\n";
}

int cmd_gradcheck(const Common& common, std::size_t rounds) {
  const auto cfg = load_config(common);
  auto results = ad::check_primitives(cfg.train.seed, rounds);
  const auto composite = check_composite(cfg.train.seed);
  results.insert(results.end(), composite.begin(), composite.end());
  std::size_t failed = 0;
  double worst = 0;
  for (const auto& r : results) {
    if (r.absolute_error >= 1e-8) worst = std::max(worst, r.relative_error);
    if (!r.passed) {
      ++failed;
      std::cout << "FAIL " << r.name << " " << r.shape << " rel " << r.relative_error << "\n";
    }
  }
  std::cout << results.size() << " checks, " << failed << " failed, worst relative error " << worst << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-tag contextual rewriting for extractive summaries"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "key=value config file");
  app.add_option("--set", common.sets, "config override key=value (repeatable)");
  app.add_option("--seed", common.seed, "random seed (falls back to GROUP_REWRITE_SEED)");
  app.add_option("--workers", common.workers, "threads for per-sample work");
  app.add_option("--vocab", common.vocab, "vocabulary file");
  app.add_flag("--no-trigram-blocking", common.no_trigram_blocking, "disable trigram blocking in beam search");

  std::string in, out, ref, dev;
  std::size_t count = 100, rounds = 20;
  bool reverse_groups = false;
  int status = 0;

  auto* synth = app.add_subcommand("synth", "generate the synthetic group-alignment task");
  synth->add_option("--count", count)->check(CLI::PositiveNumber);
  synth->add_option("--out", out)->required();
  synth->callback([&] { cmd_synth(common, count, out); });

  auto* label = app.add_subcommand("oracle-label", "add oracle extractions to a dataset");
  label->add_option("--in", in)->required();
  label->add_option("--out", out)->required();
  label->callback([&] { cmd_oracle_label(common, in, out); });

  auto* te = app.add_subcommand("train-extractor", "train the sentence extractor");
  te->add_option("--in", in)->required();
  te->add_option("--dev", dev, "labeled dev set for best-checkpoint selection");
  te->callback([&] { cmd_train_extractor(common, in, dev); });

  auto* tr = app.add_subcommand("train-rewriter", "train the group-tag rewriter");
  tr->add_option("--in", in)->required();
  tr->add_option("--dev", dev, "labeled dev set for best-checkpoint selection");
  tr->callback([&] { cmd_train_rewriter(common, in, dev); });

  auto* ex = app.add_subcommand("extract", "score and select sentences");
  ex->add_option("--in", in)->required();
  ex->add_option("--out", out)->required();
  ex->callback([&] { cmd_extract(common, in, out); });

  auto* rw = app.add_subcommand("rewrite", "rewrite the extraction given in each input line");
  rw->add_option("--in", in)->required();
  rw->add_option("--out", out)->required();
  rw->add_flag("--reverse-groups", reverse_groups, "swap group order (tag-swap probe)");
  rw->callback([&] { cmd_rewrite(common, in, out, reverse_groups); });

  auto* pl = app.add_subcommand("pipeline", "extract then rewrite");
  pl->add_option("--in", in)->required();
  pl->add_option("--out", out)->required();
  pl->callback([&] { cmd_pipeline(common, in, out); });

  auto* ev = app.add_subcommand("evaluate", "corpus ROUGE of outputs against references");
  ev->add_option("--in", in)->required();
  ev->add_option("--ref", ref)->required();
  ev->add_option("--out", out, "optional JSON report");
  ev->callback([&] { cmd_evaluate(common, in, ref, out); });

  auto* an = app.add_subcommand("analyze", "novelty, edit categories, redundancy, length");
  an->add_option("--in", in)->required();
  an->add_option("--ref", ref)->required();
  an->add_option("--out", out, "output directory")->required();
  an->callback([&] { cmd_analyze(common, in, ref, out); });

  auto* gc = app.add_subcommand("gradcheck", "central-difference checks of every primitive");
  gc->add_option("--rounds", rounds)->check(CLI::PositiveNumber);
  gc->callback([&] { status = cmd_gradcheck(common, rounds); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "grw: error: " << msg << "\n";
    return 1;
  }
  return status;
}

/* Copyright 2026 The mocha-ctcst Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mocha/cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "mocha/checkpoint.hpp"
#include "mocha/data.hpp"
#include "mocha/evaluate.hpp"
#include "mocha/metrics.hpp"
#include "mocha/oracles/suites.hpp"
#include "mocha/trace.hpp"
#include "mocha/train.hpp"

namespace mocha::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kLogLevelEnv = "MOCHA_LOG_LEVEL";

std::string join_tokens(std::span<const std::size_t> tokens) {
  return fmt::format("{}", fmt::join(tokens, " "));
}

std::string lookup(const KeyValues& kv, std::string_view key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return v;
  }
  return {};
}

std::size_t parse_size(std::string_view key, const std::string& value) {
  std::size_t pos = 0;
  try {
    const unsigned long long n = std::stoull(value, &pos);
    if (pos == value.size()) return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
  }
  throw Error(fmt::format("checkpoint metadata: bad value '{}' for {}", value, key));
}

void apply_log_level() {
  const char* level = std::getenv(kLogLevelEnv);
  if (level == nullptr || *level == '\0') return;
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::string_view(level) != "off") {
    spdlog::warn("{}: unknown level '{}' ignored", kLogLevelEnv, level);
    return;
  }
  spdlog::set_level(parsed);
}

KeyValues run_metadata(const TrainConfig& cfg, const TrainResult& result) {
  const EncoderMode mode = cfg.encoder_mode();
  KeyValues md;
  md.emplace_back("stage", std::string(to_string(cfg.stage)));
  md.emplace_back("encoder", std::string(to_string(mode.kind)));
  if (!mode.chunk.is_offline()) {
    md.emplace_back("chunk_nc", std::to_string(mode.chunk.n_c));
    md.emplace_back("chunk_nr", std::to_string(mode.chunk.n_r));
  }
  md.emplace_back("seed", std::to_string(cfg.seed));
  md.emplace_back("epochs_run", std::to_string(result.epochs_run));
  md.emplace_back("best_epoch", std::to_string(result.best_epoch));
  md.emplace_back("heldout_loss", fmt::format("{:.6f}", result.heldout_history.at(result.best_epoch)));
  return md;
}

void write_config(const fs::path& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  for (const auto& [k, v] : cfg.dump()) out << k << " = " << v << '\n';
}

int run_train(const Command& command, std::ostream& out) {
  KeyValues overrides = command.overrides;
  if (command.seed) overrides.emplace_back("seed", std::to_string(*command.seed));
  const TrainConfig cfg = load_train_config(command.config, overrides);

  const std::string seed_path =
      command.seed_checkpoint.empty() ? cfg.seed_checkpoint : command.seed_checkpoint;
  if (cfg.stage == Stage::kStage2 && seed_path.empty()) {
    throw UsageError("stage2 training needs a stage-1 checkpoint (--seed-checkpoint)");
  }
  std::optional<Model> seed;
  if (!seed_path.empty()) {
    Checkpoint ck = load_checkpoint(seed_path);
    if (!(ck.model.config == cfg.model)) {
      throw Error(fmt::format("seed checkpoint {} has a different model configuration", seed_path));
    }
    seed = std::move(ck.model);
  }

  const fs::path dir = command.out.empty() ? fs::path("mocha-run") : fs::path(command.out);
  fs::create_directories(dir);
  const std::vector<Utterance> train = generate_toy_batch(cfg.task, cfg.train_size, cfg.data_seed);
  const std::vector<Utterance> heldout =
      generate_toy_batch(cfg.task, cfg.heldout_size, cfg.data_seed + 1);
  save_dataset(dir / "heldout.data", heldout);
  write_config(dir / "config.cfg", cfg);

  TrainOutputs outputs;
  outputs.metrics_csv = dir / "metrics.csv";
  outputs.dump_dir = dir;
  TrainResult result = train_stage(cfg, train, heldout, std::move(seed), outputs);
  save_checkpoint(dir / "checkpoint.ckpt", result.model, run_metadata(cfg, result));

  const EncoderMode mode = cfg.encoder_mode();
  const auto decoded = decode_corpus(result.model, heldout, mode, 1);
  const AlignmentStats stats =
      teacher_forced_stats(result.model, heldout, mode, cfg.weights(), cfg.label_smoothing);
  out << fmt::format("epochs {} (best {})\n", result.epochs_run, result.best_epoch);
  out << fmt::format("held-out token accuracy {:.4f}, sequence accuracy {:.4f}\n",
                     token_accuracy(decoded), sequence_accuracy(decoded));
  out << fmt::format("held-out mean boundary gap {:.4f}, mean mass deviation {:.4f}\n",
                     stats.mean_sync_gap, stats.mean_mass_deviation);
  out << fmt::format("checkpoint written to {}\n", (dir / "checkpoint.ckpt").string());
  return kSuccess;
}

void write_hypotheses(const fs::path& path, std::span<const Utterance> data,
                      std::span<const DecodedUtterance> decoded) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << "id\tref\thyp\tended_with_eos\tscore\tnormalized_score\tboundaries\n";
  for (std::size_t k = 0; k < decoded.size(); ++k) {
    const Hypothesis& h = decoded[k].best;
    out << data[k].id << '\t' << join_tokens(decoded[k].reference) << '\t' << join_tokens(h.tokens)
        << '\t' << (h.ended_with_eos ? 1 : 0) << '\t' << fmt::format("{:.6f}", h.score) << '\t'
        << fmt::format("{:.6f}", h.normalized_score()) << '\t'
        << join_tokens(h.boundaries.positions) << '\n';
  }
}

int run_decode(const Command& command, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(command.checkpoint);
  const std::vector<Utterance> data = load_dataset(command.data);
  const EncoderMode mode = resolve_encoder(ck.metadata, command);
  const auto decoded = decode_corpus(ck.model, data, mode, command.beam);

  const fs::path dir = command.out.empty() ? fs::path("decode-out") : fs::path(command.out);
  fs::create_directories(dir);
  write_hypotheses(dir / "hyps.tsv", data, decoded);
  std::vector<UtteranceScore> scores;
  scores.reserve(decoded.size());
  for (const auto& d : decoded) scores.push_back(d.score);
  save_results(dir / "results.tsv", scores);

  out << fmt::format("{} utterances, encoder {}, beam {}\n", decoded.size(), to_string(mode.kind),
                     command.beam);
  out << fmt::format("WER {:.4f}, token accuracy {:.4f}, sequence accuracy {:.4f}\n",
                     corpus_wer(scores), token_accuracy(decoded), sequence_accuracy(decoded));
  return kSuccess;
}

int run_align(const Command& command, std::ostream& out) {
  if (command.out.empty()) throw UsageError("align needs --out <file>");
  const Checkpoint ck = load_checkpoint(command.checkpoint);
  const std::vector<Utterance> data = load_dataset(command.data);
  const EncoderMode mode = resolve_encoder(ck.metadata, command);
  std::vector<AlignmentTrace> traces;
  traces.reserve(data.size());
  for (const Utterance& utt : data) traces.push_back(build_alignment_trace(ck.model, utt, mode));
  const fs::path path(command.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_traces(path, traces);
  out << fmt::format("{} traces, mean |gap| {:.4f} frames\n", traces.size(), mean_abs_gap(traces));
  return kSuccess;
}

int run_report(const Command& command, std::ostream& out) {
  const std::vector<UtteranceScore> results = load_results(command.results);
  const std::vector<std::size_t> edges =
      command.buckets.empty() ? decile_edges(results) : parse_edges(command.buckets);
  if (std::adjacent_find(edges.begin(), edges.end(), std::greater_equal<>()) != edges.end()) {
    throw UsageError("bucket edges must be strictly increasing");
  }
  const std::vector<Bucket> buckets = bucketed_report(results, edges);
  out << "frames\tutterances\tref_tokens\terrors\twer\n";
  for (const Bucket& b : buckets) {
    const std::string range = b.upper ? fmt::format("[{},{})", b.lower, *b.upper)
                                      : fmt::format("[{},inf)", b.lower);
    out << fmt::format("{}\t{}\t{}\t{}\t{:.4f}\n", range, b.utterances, b.reference_tokens,
                       b.errors, b.wer);
  }
  out << fmt::format("all\t{}\t-\t-\t{:.4f}\n", results.size(), corpus_wer(results));
  return kSuccess;
}

int run_selftest(const Command& command, std::ostream& out) {
  const auto reports = oracles::run_suites(command.filter);
  if (reports.empty()) {
    throw UsageError(fmt::format("no suite matches '{}' (available: {})", command.filter,
                                 fmt::join(oracles::suite_names(), ", ")));
  }
  bool ok = true;
  for (const auto& r : reports) {
    out << fmt::format("[{}] {}: {} ({:.2f}s)\n", r.passed ? "PASS" : "FAIL", r.name, r.detail,
                       r.seconds);
    ok = ok && r.passed;
  }
  return ok ? kSuccess : kSelftestFailed;
}

}  // namespace

std::vector<std::size_t> parse_edges(std::string_view text) {
  std::vector<std::size_t> edges;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find(',', begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string item(text.substr(begin, end - begin));
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (item.empty() || pos != item.size() || item.front() == '-') {
      throw UsageError(fmt::format("bad bucket edge '{}'", item));
    }
    edges.push_back(static_cast<std::size_t>(value));
    begin = end + 1;
  }
  return edges;
}

EncoderMode resolve_encoder(const KeyValues& metadata, const Command& command) {
  EncoderMode mode;
  if (const std::string kind = lookup(metadata, "encoder"); !kind.empty()) {
    mode.kind = parse_encoder_kind(kind);
  }
  if (const std::string nc = lookup(metadata, "chunk_nc"); !nc.empty()) {
    mode.chunk.n_c = parse_size("chunk_nc", nc);
    mode.chunk.n_r = parse_size("chunk_nr", lookup(metadata, "chunk_nr"));
  }
  if (command.encoder) {
    mode.kind = parse_encoder_kind(*command.encoder);
    if (mode.kind != EncoderKind::kLcBlstm) mode.chunk = ChunkConfig::offline();
  }
  if (command.chunk_nc) mode.chunk.n_c = *command.chunk_nc;
  if (command.chunk_nr) mode.chunk.n_r = *command.chunk_nr;
  if (mode.kind == EncoderKind::kLcBlstm && mode.chunk.is_offline()) {
    throw UsageError("the lcblstm encoder needs --chunk-nc");
  }
  if (mode.chunk.n_c == 0) throw UsageError("--chunk-nc must be >= 1");
  return mode;
}

Command parse_args(const std::vector<std::string>& args) {
  Command cmd;
  CLI::App app{"Streaming monotonic chunkwise attention with CTC synchronization", "mocha"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");

  CLI::App* train = app.add_subcommand("train", "Train one curriculum stage");
  train->add_option("--config", cmd.config, "Training config file")->required();
  train->add_option("--seed-checkpoint", cmd.seed_checkpoint, "Stage-1 checkpoint for stage 2");
  train->add_option("--out", cmd.out, "Output directory (default mocha-run)");
  std::vector<std::string> assignments;
  train->add_option("overrides", assignments, "key=value config overrides");

  CLI::App* decode = app.add_subcommand("decode", "Decode a dataset and score it");
  CLI::App* align = app.add_subcommand("align", "Export boundary/spike traces");
  std::string encoder;
  std::size_t chunk_nc = 0;
  std::size_t chunk_nr = 0;
  std::vector<std::pair<CLI::App*, std::vector<CLI::Option*>>> model_opts;
  for (CLI::App* sub : {decode, align}) {
    sub->add_option("--checkpoint", cmd.checkpoint, "Model checkpoint")->required();
    sub->add_option("--data", cmd.data, "Dataset file")->required();
    std::vector<CLI::Option*> opts;
    opts.push_back(sub->add_option("--encoder", encoder, "Encoder override: lstm, blstm, lcblstm"));
    opts.push_back(sub->add_option("--chunk-nc", chunk_nc, "LC-BLSTM central frames (raw)"));
    opts.push_back(sub->add_option("--chunk-nr", chunk_nr, "LC-BLSTM lookahead frames (raw)"));
    model_opts.emplace_back(sub, std::move(opts));
  }
  decode->add_option("--beam", cmd.beam, "Beam width (1 = greedy)")->check(CLI::PositiveNumber);
  decode->add_option("--out", cmd.out, "Output directory (default decode-out)");
  align->add_option("--out", cmd.out, "Trace file")->required();

  CLI::App* report = app.add_subcommand("report", "Length-bucketed error report");
  report->add_option("--results", cmd.results, "results.tsv from decode")->required();
  report->add_option("--buckets", cmd.buckets, "Comma-separated frame edges (default deciles)");

  CLI::App* selftest = app.add_subcommand("selftest", "Run the oracle and gradient suites");
  selftest->add_option("--filter", cmd.filter, "Run suites whose name contains this");

  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a == "--seed") ++k;
    if (a.empty() || a.front() == '-') continue;
    const auto verbs = {"train", "decode", "align", "report", "selftest"};
    if (std::find(verbs.begin(), verbs.end(), a) == verbs.end()) {
      throw UsageError(fmt::format("unknown verb '{}'", a));
    }
    break;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    std::ostringstream text;
    std::ostringstream err;
    app.exit(e, text, err);
    throw HelpRequested(text.str());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (*seed_opt) cmd.seed = seed;
  if (train->parsed()) {
    cmd.verb = Verb::kTrain;
    for (const std::string& a : assignments) {
      try {
        auto kv = split_assignment(a);
        TrainConfig probe;
        probe.set(kv.first, kv.second);
        cmd.overrides.push_back(std::move(kv));
      } catch (const Error& e) {
        throw UsageError(fmt::format("override '{}': {}", a, e.what()));
      }
    }
  } else if (decode->parsed() || align->parsed()) {
    cmd.verb = decode->parsed() ? Verb::kDecode : Verb::kAlign;
    for (const auto& [sub, opts] : model_opts) {
      if (!sub->parsed()) continue;
      if (*opts[0]) cmd.encoder = encoder;
      if (*opts[1]) cmd.chunk_nc = chunk_nc;
      if (*opts[2]) cmd.chunk_nr = chunk_nr;
    }
    if (cmd.encoder) {
      try {
        (void)parse_encoder_kind(*cmd.encoder);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
  } else if (report->parsed()) {
    cmd.verb = Verb::kReport;
  } else {
    cmd.verb = Verb::kSelftest;
  }
  return cmd;
}

int run(const Command& command, std::ostream& out) {
  switch (command.verb) {
    case Verb::kTrain:
      return run_train(command, out);
    case Verb::kDecode:
      return run_decode(command, out);
    case Verb::kAlign:
      return run_align(command, out);
    case Verb::kReport:
      return run_report(command, out);
    case Verb::kSelftest:
      return run_selftest(command, out);
  }
  return kUsage;
}

int main_entry(int argc, const char* const* argv) {
  apply_log_level();
  const std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
  Command command;
  try {
    command = parse_args(args);
  } catch (const HelpRequested& help) {
    std::cout << help.what();
    return kSuccess;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun 'mocha --help' for usage\n";
    return kUsage;
  }
  try {
    return run(command, std::cout);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace mocha::cli

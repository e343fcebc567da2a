// Copyright 2026 cycletrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "cyc/cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyc/cli/plot.hpp"
#include "cyc/data/feature_file.hpp"
#include "cyc/harness/evaluate.hpp"
#include "cyc/harness/trainer.hpp"
#include "cyc/log.hpp"

namespace cyc {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string manifest;
  std::optional<std::uint64_t> seed;

  std::string which = "asr";
  std::string mode = "st";
  std::string asr, tts, lm;

  std::string ckpt, split, json;
  std::size_t max_len = 20;

  std::string metrics;
  std::size_t max_rows = 200;
};

AppConfig load_app_config(const Options& o) {
  AppConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.finalize();
  }
  if (!o.manifest.empty()) cfg.manifest = o.manifest;
  return cfg;
}

CorpusManifest open_manifest(const AppConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("no manifest: pass --manifest or set paths.manifest");
  return read_manifest(cfg.manifest);
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::unique_ptr<AsrModel> asr_from(const std::string& path) {
  auto m = restore_asr(load_checkpoint(path));
  if (!m) throw FormatError("checkpoint " + path + " holds no ASR model", 0);
  return m;
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  const AppConfig cfg = load_app_config(o);
  const fs::path dir(o.out);
  ensure_dir(dir);
  gen_corpus(cfg.corpus, dir);
  out << (dir / "manifest.json").string() << '\n';
  return kExitOk;
}

int cmd_pretrain(const Options& o, std::ostream& out) {
  const AppConfig cfg = load_app_config(o);
  const PretrainTarget which = parse_pretrain_target(o.which);
  const CorpusManifest manifest = open_manifest(cfg);
  const fs::path dir(o.out);
  ensure_dir(dir);
  const std::string name(to_string(which));
  try {
    const RunResult r = pretrain(which, cfg, manifest);
    save_checkpoint(dir / (name + ".ckpt"), r.checkpoint);
    write_metrics(dir / (name + "_metrics.csv"), r.metrics);
  } catch (const DivergenceError& e) {
    save_checkpoint(dir / (name + ".last_good.ckpt"), e.last_good());
    write_metrics(dir / (name + "_metrics.csv"), e.metrics());
    throw;
  }
  out << (dir / (name + ".ckpt")).string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const AppConfig base = load_app_config(o);
  AppConfig cfg = base;
  cfg.train.mode = parse_train_mode(o.mode);
  const bool baseline = cfg.train.mode == TrainMode::kBaseline;
  const bool needs_lm = cfg.train.mode == TrainMode::kSo || cfg.train.mode == TrainMode::kSt;
  if (!baseline && o.tts.empty()) {
    throw ConfigError("--mode " + o.mode + " requires --tts");
  }
  if (needs_lm && o.lm.empty()) throw ConfigError("--mode " + o.mode + " requires --lm");
  if (baseline && (!o.tts.empty() || !o.lm.empty())) {
    log_warn("--mode baseline ignores --tts and --lm");
  }

  const CorpusManifest manifest = open_manifest(cfg);
  CycleInputs in;
  in.asr = asr_from(o.asr);
  if (!baseline) {
    in.tts = restore_tts(load_checkpoint(o.tts));
    if (!in.tts) throw FormatError("checkpoint " + o.tts + " holds no TTS model", 0);
  }
  if (needs_lm) {
    in.lm = restore_lm(load_checkpoint(o.lm));
    if (!in.lm) throw FormatError("checkpoint " + o.lm + " holds no language model", 0);
  }

  const fs::path dir(o.out);
  ensure_dir(dir);
  try {
    const RunResult r = train_cycle(cfg, manifest, std::move(in));
    save_checkpoint(dir / "final.ckpt", r.checkpoint);
    write_metrics(dir / "metrics.csv", r.metrics);
  } catch (const DivergenceError& e) {
    save_checkpoint(dir / "last_good.ckpt", e.last_good());
    write_metrics(dir / "metrics.csv", e.metrics());
    throw;
  }
  out << (dir / "final.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const CorpusManifest manifest = read_manifest(o.manifest);
  if (!manifest.splits.contains(o.split)) throw ConfigError("unknown split '" + o.split + "'");
  const Dataset split = load_split(manifest, o.split);
  if (split.size() == 0 || !split.has_tokens() || !split.has_features()) {
    throw ConfigError("split '" + o.split + "' has no labeled speech to evaluate");
  }
  const auto asr = asr_from(o.ckpt);
  const EvalResult r = evaluate(*asr, split, o.max_len);

  char line[96];
  std::snprintf(line, sizeof line, "ter=%.4f nll=%.4f", r.ter, r.nll);
  out << line << '\n';
  if (!o.json.empty()) {
    const nlohmann::json j = {{"split", o.split},       {"ter", r.ter},
                              {"nll", r.nll},           {"edits", r.edits},
                              {"ref_tokens", r.ref_tokens}};
    write_text(o.json, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_plot(const Options& o, std::ostream& out) {
  const std::vector<MetricsRow> rows = parse_metrics(read_text(o.metrics));
  const fs::path svg(o.out);
  fs::path csv = svg;
  csv.replace_extension(".csv");
  if (csv == fs::path(o.metrics)) csv.replace_filename(svg.stem().string() + "_downsampled.csv");
  const auto kept = downsample(rows, o.max_rows);
  if (svg.has_parent_path()) ensure_dir(svg.parent_path());
  write_text(svg, render_svg(rows));
  write_metrics(csv, kept);
  out << svg.string() << '\n' << csv.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Cycle-consistent ASR/TTS training on synthetic speech"};
  app.name("cycletrain");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Override the config seed; all randomness derives from it");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->add_option("--config", o.config, "Config JSON")->required();
  gen->add_option("--out", o.out, "Output directory")->required();
  add_seed(gen);

  CLI::App* pre = app.add_subcommand("pretrain", "Pretrain one model on its supervised data");
  pre->add_option("--which", o.which, "Model to train")
      ->check(CLI::IsMember({"asr", "tts", "lm"}))
      ->capture_default_str();
  pre->add_option("--config", o.config, "Config JSON")->required();
  pre->add_option("--manifest", o.manifest, "Corpus manifest (overrides paths.manifest)");
  pre->add_option("--out", o.out, "Output directory")->required();
  add_seed(pre);

  CLI::App* train = app.add_subcommand("train", "Cycle training from pretrained checkpoints");
  train->add_option("--mode", o.mode, "Training mode")
      ->check(CLI::IsMember({"baseline", "so", "to", "st"}))
      ->capture_default_str();
  train->add_option("--config", o.config, "Config JSON")->required();
  train->add_option("--manifest", o.manifest, "Corpus manifest (overrides paths.manifest)");
  train->add_option("--asr", o.asr, "Pretrained ASR checkpoint")->required();
  train->add_option("--tts", o.tts, "Pretrained TTS checkpoint (so, to, st)");
  train->add_option("--lm", o.lm, "Pretrained LM checkpoint (so, st)");
  train->add_option("--out", o.out, "Output directory")->required();
  add_seed(train);

  CLI::App* ev = app.add_subcommand("eval", "Token error rate and NLL of an ASR checkpoint");
  ev->add_option("--ckpt", o.ckpt, "Checkpoint holding an ASR model")->required();
  ev->add_option("--split", o.split, "Labeled split name")->required();
  ev->add_option("--manifest", o.manifest, "Corpus manifest")->required();
  ev->add_option("--json", o.json, "Also write the result as JSON to this path");
  ev->add_option("--max-len", o.max_len, "Longest greedy hypothesis")->capture_default_str();

  CLI::App* plot = app.add_subcommand("plot", "Render a metrics CSV to SVG");
  plot->add_option("--metrics", o.metrics, "Metrics CSV")->required();
  plot->add_option("--out", o.out, "Output SVG path")->required();
  plot->add_option("--max-rows", o.max_rows, "Rows per phase kept in the companion CSV")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o, out);
    if (pre->parsed()) return cmd_pretrain(o, out);
    if (train->parsed()) return cmd_train(o, out);
    if (ev->parsed()) return cmd_eval(o, out);
    if (plot->parsed()) return cmd_plot(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace cyc

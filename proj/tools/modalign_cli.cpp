// Copyright 2026 the modalign authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// modalign command line driver.
//
// Verbs:
//   gen-data    generate a synthetic corpus and write it to a directory
//   train       run one training loop, writing metrics and a checkpoint
//   eval        score a saved checkpoint on one corpus split
//   compare     train several configs across a seed set and tabulate
//   gradcheck   run the finite-difference gradient suite
//   ctc-oracle  run the CTC enumeration oracle suite
//
// Configuration comes from an optional key=value config file, then repeated
// --set key=value overrides, then the named convenience flags (last wins).
// MODALIGN_OUT_DIR sets the base for default output paths ("." unset).
//
// Exit codes: 0 success, 3 NaN abort during training, 1 everything else
// (contract violations, malformed files, failed suites), with a diagnostic
// on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "modalign/checkpoint.hpp"
#include "modalign/common.hpp"
#include "modalign/config.hpp"
#include "modalign/data.hpp"
#include "modalign/diagnostics.hpp"
#include "modalign/train.hpp"

namespace {

using namespace modalign;

std::string g17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string out_base() {
  const char* env = std::getenv("MODALIGN_OUT_DIR");
  return (env != nullptr && *env != '\0') ? std::string(env) : std::string(".");
}

// Shared config plumbing for the verbs that take a RunConfig.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  std::string mode;
  int steps = 0;
  std::string corpus_dir;
  bool print_config = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* steps_opt = nullptr;

  void attach(CLI::App* cmd, bool with_train_flags) {
    cmd->add_option("--config", config_path, "config file (key=value per line)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config key, e.g. --set lr=1e-3");
    seed_opt = cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--corpus", corpus_dir, "load the corpus from this directory");
    if (with_train_flags) {
      cmd->add_option("--mode", mode, "baseline, aligner, or aligner_switch");
      steps_opt = cmd->add_option("--steps", steps, "training steps");
    }
    cmd->add_flag("--print-config", print_config, "print the effective config before running");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    apply_overrides(cfg, overrides);
    std::vector<std::string> flag_overrides;
    if (seed_opt != nullptr && seed_opt->count() > 0)
      flag_overrides.push_back("seed=" + std::to_string(seed));
    if (!mode.empty()) flag_overrides.push_back("mode=" + mode);
    if (steps_opt != nullptr && steps_opt->count() > 0)
      flag_overrides.push_back("steps=" + std::to_string(steps));
    if (!corpus_dir.empty()) flag_overrides.push_back("corpus_dir=" + corpus_dir);
    apply_overrides(cfg, flag_overrides);
    return cfg;
  }
};

// Loads cfg.corpus_dir when set, else generates in memory. A loaded corpus
// is authoritative: its generation parameters replace cfg.corpus and the
// model's vocabulary and feature sizes follow it.
Corpus resolve_corpus(RunConfig& cfg) {
  if (cfg.corpus_dir.empty()) {
    cfg.validate();
    return generate_corpus(cfg.corpus);
  }
  Corpus corpus = load_corpus(cfg.corpus_dir);
  cfg.corpus = corpus.config;
  cfg.model.vocab_size = corpus.config.vocab_size;
  cfg.model.feature_dim = corpus.config.feature_dim;
  cfg.validate();
  return corpus;
}

std::string eval_line(const std::string& split, const EvalResult& r) {
  std::ostringstream os;
  os << "split:" << split << " wer:" << g17(r.wer) << " slot_f1:" << g17(r.slot_f1)
     << " boundary_mae:" << g17(r.boundary_mae) << " boundary_overlap:" << g17(r.boundary_overlap)
     << " infeasible:" << r.infeasible;
  return os.str();
}

int run_gen_data(const ConfigArgs& args, std::string out_dir) {
  RunConfig cfg = args.resolve();
  cfg.validate();
  if (args.print_config) std::cout << cfg.canonical() << "\n";
  if (out_dir.empty()) out_dir = out_base() + "/corpus";
  Corpus corpus = generate_corpus(cfg.corpus);
  save_corpus(corpus, out_dir);
  std::cout << "corpus:" << out_dir << " train:" << corpus.train.size()
            << " dev:" << corpus.dev.size() << " test:" << corpus.test.size()
            << " vocab:" << corpus.config.vocab_size << " hash:" << std::hex
            << corpus.config.hash() << std::dec << "\n";
  return 0;
}

int run_train(const ConfigArgs& args, std::string out_dir) {
  RunConfig cfg = args.resolve();
  Corpus corpus = resolve_corpus(cfg);
  if (args.print_config) std::cout << cfg.canonical() << "\n";
  if (out_dir.empty()) out_dir = out_base() + "/run";
  std::filesystem::create_directories(out_dir);

  std::ofstream metrics(out_dir + "/metrics.txt");
  if (!metrics) throw IoError("cannot open " + out_dir + "/metrics.txt for writing");
  TrainResult result = train_run(cfg, corpus, &metrics, out_dir + "/final.ckpt");
  metrics.close();

  std::ofstream summary(out_dir + "/summary.txt");
  if (!summary) throw IoError("cannot open " + out_dir + "/summary.txt for writing");
  summary << "mode:" << mode_name(cfg.mode) << " steps:" << cfg.steps << " seed:" << cfg.seed
          << " infeasible_skipped:" << result.infeasible_skipped << "\n";
  summary << eval_line("dev", result.dev) << "\n";
  summary << eval_line("test", result.test) << "\n";
  summary << "wall_ms:" << g17(result.wall_ms) << "\n";
  summary.close();

  std::cout << eval_line("dev", result.dev) << "\n";
  std::cout << eval_line("test", result.test) << "\n";
  std::cout << "run:" << out_dir << " checkpoint:" << out_dir + "/final.ckpt"
            << " metrics:" << out_dir + "/metrics.txt" << "\n";
  return 0;
}

int run_eval(const ConfigArgs& args, const std::string& ckpt, const std::string& split,
             bool force) {
  RunConfig cfg = args.resolve();
  Corpus corpus = resolve_corpus(cfg);
  if (args.print_config) std::cout << cfg.canonical() << "\n";
  AsrModel model = make_model(cfg);
  load_checkpoint(ckpt, cfg.hash(), model.params(), force);
  const std::vector<Utterance>* utts = nullptr;
  if (split == "train") utts = &corpus.train;
  else if (split == "dev") utts = &corpus.dev;
  else if (split == "test") utts = &corpus.test;
  else throw ContractError("unknown split '" + split + "'");
  std::cout << eval_line(split, evaluate(model, *utts, corpus.slot_map)) << "\n";
  return 0;
}

int run_compare(const std::vector<std::string>& config_paths,
                const std::vector<std::string>& overrides, const std::string& seeds_csv,
                const std::string& corpus_dir, const std::string& out_file) {
  std::vector<RunConfig> configs;
  for (const std::string& path : config_paths) {
    RunConfig cfg = load_run_config(path);
    apply_overrides(cfg, overrides);
    if (!corpus_dir.empty()) apply_overrides(cfg, {"corpus_dir=" + corpus_dir});
    cfg.validate();
    configs.push_back(cfg);
  }

  std::vector<uint64_t> seeds;
  std::stringstream ss(seeds_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ContractError("bad seed '" + item + "' in --seeds");
    }
  }

  RunConfig lead = configs.front();
  Corpus corpus = resolve_corpus(lead);
  // Arms naming the same directory adopt the loaded generation parameters
  // the way train does; anything else must already match the corpus and is
  // left for the compare contract to reject.
  for (RunConfig& cfg : configs) {
    if (!cfg.corpus_dir.empty() && cfg.corpus_dir == lead.corpus_dir) {
      cfg.corpus = corpus.config;
      cfg.model.vocab_size = corpus.config.vocab_size;
      cfg.model.feature_dim = corpus.config.feature_dim;
      cfg.validate();
    }
  }
  ComparisonTable table = compare_ablations(configs, seeds, corpus, &std::cerr);
  std::cout << table.machine_readable();
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw IoError("cannot open " + out_file + " for writing");
    out << table.machine_readable();
  }
  return 0;
}

int run_gradcheck(uint64_t seed, bool verbose) {
  GradientReport report = run_gradient_suite(seed, verbose ? &std::cerr : nullptr);
  std::cout << "gradcheck checks:" << report.checks << " failures:" << report.failures
            << " worst:" << g17(report.worst) << " tol:" << g17(kGradTol)
            << " wall_ms:" << g17(report.wall_ms) << "\n";
  if (report.ok()) return 0;
  for (const std::string& line : report.lines) std::cerr << line << "\n";
  return 1;
}

int run_ctc_oracle(int instances, uint64_t seed, bool verbose) {
  CtcOracleReport report = run_ctc_oracle_suite(instances, seed, verbose ? &std::cerr : nullptr);
  std::cout << "ctc-oracle instances:" << report.instances
            << " loss_failures:" << report.loss_failures
            << " grad_failures:" << report.grad_failures
            << " align_failures:" << report.align_failures
            << " worst_loss_err:" << g17(report.worst_loss_err)
            << " worst_grad_err:" << g17(report.worst_grad_err) << " tol:" << g17(kCtcOracleTol)
            << " wall_ms:" << g17(report.wall_ms) << "\n";
  if (report.ok()) return 0;
  for (const std::string& line : report.failures) std::cerr << line << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modalign: dual-encoder ASR training on synthetic corpora"};
  app.require_subcommand(0, 1);
  bool show_defaults = false;
  app.add_flag("--defaults", show_defaults, "print the defaults table and exit");

  ConfigArgs gen_args;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a corpus and write it to disk");
  gen_args.attach(gen, /*with_train_flags=*/false);
  gen->add_option("--out", gen_out, "output directory (default $MODALIGN_OUT_DIR/corpus)");

  ConfigArgs train_args;
  std::string train_out;
  CLI::App* train = app.add_subcommand("train", "train one model");
  train_args.attach(train, /*with_train_flags=*/true);
  train->add_option("--out", train_out, "run directory (default $MODALIGN_OUT_DIR/run)");

  ConfigArgs eval_args;
  std::string eval_ckpt, eval_split = "test";
  bool eval_force = false;
  CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a corpus split");
  eval_args.attach(eval, /*with_train_flags=*/false);
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "train, dev, or test");
  eval->add_flag("--force", eval_force, "load despite a config-hash mismatch");

  std::vector<std::string> cmp_configs, cmp_overrides;
  std::string cmp_seeds, cmp_corpus, cmp_out;
  CLI::App* compare = app.add_subcommand("compare", "train configs across seeds and tabulate");
  compare->add_option("--config", cmp_configs, "config file, repeat per arm")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--set", cmp_overrides, "override applied to every arm");
  compare->add_option("--seeds", cmp_seeds, "comma-separated seed list, e.g. 1,2,3")->required();
  compare->add_option("--corpus", cmp_corpus, "shared corpus directory");
  compare->add_option("--out", cmp_out, "also write the table to this file");

  uint64_t grad_seed = 1;
  bool grad_verbose = false;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", grad_seed, "probe seed");
  gradcheck->add_flag("--verbose", grad_verbose, "log every check to stderr");

  int oracle_instances = 200;
  uint64_t oracle_seed = 1;
  bool oracle_verbose = false;
  CLI::App* oracle = app.add_subcommand("ctc-oracle", "CTC enumeration oracle suite");
  oracle->add_option("--instances", oracle_instances, "random instances to draw");
  oracle->add_option("--seed", oracle_seed, "instance seed");
  oracle->add_flag("--verbose", oracle_verbose, "log every instance to stderr");

  CLI11_PARSE(app, argc, argv);
  if (show_defaults) {
    std::cout << modalign::default_config_text();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) return run_gen_data(gen_args, gen_out);
    if (train->parsed()) return run_train(train_args, train_out);
    if (eval->parsed()) return run_eval(eval_args, eval_ckpt, eval_split, eval_force);
    if (compare->parsed())
      return run_compare(cmp_configs, cmp_overrides, cmp_seeds, cmp_corpus, cmp_out);
    if (gradcheck->parsed()) return run_gradcheck(grad_seed, grad_verbose);
    if (oracle->parsed()) return run_ctc_oracle(oracle_instances, oracle_seed, oracle_verbose);
  } catch (const modalign::NanAbort& e) {
    std::cerr << "nan abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

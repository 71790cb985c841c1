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

#include "modalign/config.hpp"

#include <fstream>
#include <sstream>

namespace modalign {

std::string mode_name(AblationMode mode) {
  switch (mode) {
    case AblationMode::kBaseline:
      return "baseline";
    case AblationMode::kAligner:
      return "aligner";
    case AblationMode::kAlignerSwitch:
      return "aligner_switch";
  }
  throw ContractError("mode_name: unknown mode");
}

AblationMode parse_mode(const std::string& name) {
  if (name == "baseline") return AblationMode::kBaseline;
  if (name == "aligner") return AblationMode::kAligner;
  if (name == "aligner_switch" || name == "aligner+switch") return AblationMode::kAlignerSwitch;
  throw ContractError("unknown ablation mode: " + name +
                      " (expected baseline, aligner, or aligner_switch)");
}

void RunConfig::apply_mode() {
  switch (mode) {
    case AblationMode::kBaseline:
      weights.mlm = 0.0;
      schedule.p_start = 0.0;
      schedule.p_end = 0.0;
      break;
    case AblationMode::kAligner:
      schedule.p_start = 0.0;
      schedule.p_end = 0.0;
      break;
    case AblationMode::kAlignerSwitch:
      break;
  }
}

void RunConfig::validate() const {
  model.encoder_config().validate();
  model.decoder_config().validate();
  corpus.validate();
  weights.validate();
  schedule.validate();
  if (adam.lr <= 0.0) throw ContractError("RunConfig: lr must be positive");
  if (adam.warmup_steps < 0) throw ContractError("RunConfig: lr_warmup_steps must be non-negative");
  if (adam.decay_steps < 0) throw ContractError("RunConfig: lr_decay_steps must be non-negative");
  if (adam.clip_norm < 0.0) throw ContractError("RunConfig: clip_norm must be non-negative");
  if (mask_rate < 0.0 || mask_rate > 1.0) throw ContractError("RunConfig: mask_rate in [0, 1]");
  if (steps < 0) throw ContractError("RunConfig: steps must be non-negative");
  if (eval_every < 1) throw ContractError("RunConfig: eval_every must be positive");
  if (align_warmup_steps < 0)
    throw ContractError("RunConfig: align_warmup_steps must be non-negative");
  if (model.vocab_size != corpus.vocab_size)
    throw ContractError("RunConfig: model and corpus disagree on vocab_size");
  if (model.feature_dim != corpus.feature_dim)
    throw ContractError("RunConfig: model and corpus disagree on feature_dim");

  // The mode invariant: baseline has no MLM term and no switching; the
  // aligner modes require a live MLM term; only aligner_switch may swap.
  const bool switching = schedule.p_start > 0.0 || schedule.p_end > 0.0;
  switch (mode) {
    case AblationMode::kBaseline:
      if (weights.mlm != 0.0 || switching)
        throw ContractError("RunConfig: baseline mode requires lambda_mlm=0 and p=0");
      break;
    case AblationMode::kAligner:
      if (weights.mlm <= 0.0) throw ContractError("RunConfig: aligner mode requires lambda_mlm>0");
      if (switching) throw ContractError("RunConfig: aligner mode requires p=0");
      break;
    case AblationMode::kAlignerSwitch:
      if (weights.mlm <= 0.0)
        throw ContractError("RunConfig: aligner_switch mode requires lambda_mlm>0");
      break;
  }
}

double RunConfig::switch_p(int step) const {
  if (mode != AblationMode::kAlignerSwitch) return 0.0;
  if (step < align_warmup_steps) return 0.0;
  return switch_schedule(step - align_warmup_steps, schedule);
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  s << "mode=" << mode_name(mode) << "|" << model.canonical() << "|" << corpus.canonical()
    << "|lambda_ctc=" << weights.ctc << "|lambda_mlm=" << weights.mlm
    << "|lambda_dec=" << weights.dec << "|p_start=" << schedule.p_start
    << "|p_end=" << schedule.p_end << "|switch_warmup_steps=" << schedule.warmup_steps
    << "|lr=" << adam.lr << "|beta1=" << adam.beta1 << "|beta2=" << adam.beta2
    << "|adam_eps=" << adam.eps << "|lr_warmup_steps=" << adam.warmup_steps
    << "|lr_decay_steps=" << adam.decay_steps << "|clip_norm=" << adam.clip_norm << "|mask_rate=" << mask_rate << "|steps=" << steps
    << "|eval_every=" << eval_every << "|align_warmup_steps=" << align_warmup_steps
    << "|seed=" << seed;
  return s.str();
}

uint64_t RunConfig::hash() const { return model.hash(); }

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ContractError("config: " + key + " expects true/false, got " + value);
}

void assign_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "mode") {
      cfg.mode = parse_mode(value);
    } else if (key == "corpus_dir") {
      cfg.corpus_dir = value;
    } else if (key == "d_model") {
      cfg.model.d_model = std::stoi(value);
    } else if (key == "n_layers") {
      cfg.model.n_layers = std::stoi(value);
    } else if (key == "n_heads") {
      cfg.model.n_heads = std::stoi(value);
    } else if (key == "d_ff") {
      cfg.model.d_ff = std::stoi(value);
    } else if (key == "subsample_factor") {
      cfg.model.subsample_factor = std::stoi(value);
    } else if (key == "dec_layers") {
      cfg.model.dec_layers = std::stoi(value);
    } else if (key == "max_len") {
      cfg.model.max_len = std::stoi(value);
    } else if (key == "dropout") {
      cfg.model.dropout = std::stod(value);
    } else if (key == "tie_embeddings") {
      cfg.model.tie_embeddings = parse_bool(value, key);
    } else if (key == "use_positional") {
      cfg.model.use_positional = parse_bool(value, key);
    } else if (key == "vocab_size") {
      cfg.model.vocab_size = std::stoi(value);
      cfg.corpus.vocab_size = cfg.model.vocab_size;
    } else if (key == "feature_dim") {
      cfg.model.feature_dim = std::stoi(value);
      cfg.corpus.feature_dim = cfg.model.feature_dim;
    } else if (key == "n_train") {
      cfg.corpus.n_train = std::stoi(value);
    } else if (key == "n_dev") {
      cfg.corpus.n_dev = std::stoi(value);
    } else if (key == "n_test") {
      cfg.corpus.n_test = std::stoi(value);
    } else if (key == "len_min") {
      cfg.corpus.len_min = std::stoi(value);
    } else if (key == "len_max") {
      cfg.corpus.len_max = std::stoi(value);
    } else if (key == "dur_min") {
      cfg.corpus.dur_min = std::stoi(value);
    } else if (key == "dur_max") {
      cfg.corpus.dur_max = std::stoi(value);
    } else if (key == "noise_sigma") {
      cfg.corpus.noise_sigma = std::stod(value);
    } else if (key == "silence_prob") {
      cfg.corpus.silence_prob = std::stod(value);
    } else if (key == "n_slot_types") {
      cfg.corpus.n_slot_types = std::stoi(value);
    } else if (key == "o_fraction") {
      cfg.corpus.o_fraction = std::stod(value);
    } else if (key == "corpus_seed") {
      cfg.corpus.seed = std::stoull(value);
    } else if (key == "lambda_ctc") {
      cfg.weights.ctc = std::stod(value);
    } else if (key == "lambda_mlm") {
      cfg.weights.mlm = std::stod(value);
    } else if (key == "lambda_dec") {
      cfg.weights.dec = std::stod(value);
    } else if (key == "p_start") {
      cfg.schedule.p_start = std::stod(value);
    } else if (key == "p_end") {
      cfg.schedule.p_end = std::stod(value);
    } else if (key == "switch_warmup_steps") {
      cfg.schedule.warmup_steps = std::stoi(value);
    } else if (key == "lr") {
      cfg.adam.lr = std::stod(value);
    } else if (key == "beta1") {
      cfg.adam.beta1 = std::stod(value);
    } else if (key == "beta2") {
      cfg.adam.beta2 = std::stod(value);
    } else if (key == "adam_eps") {
      cfg.adam.eps = std::stod(value);
    } else if (key == "lr_warmup_steps") {
      cfg.adam.warmup_steps = std::stoi(value);
    } else if (key == "lr_decay_steps") {
      cfg.adam.decay_steps = std::stoi(value);
    } else if (key == "clip_norm") {
      cfg.adam.clip_norm = std::stod(value);
    } else if (key == "mask_rate") {
      cfg.mask_rate = std::stod(value);
    } else if (key == "steps") {
      cfg.steps = std::stoi(value);
    } else if (key == "eval_every") {
      cfg.eval_every = std::stoi(value);
    } else if (key == "align_warmup_steps") {
      cfg.align_warmup_steps = std::stoi(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else {
      throw ContractError("config: unknown key: " + key);
    }
  } catch (const std::invalid_argument&) {
    throw ContractError("config: cannot parse value for " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ContractError("config: value out of range for " + key + ": " + value);
  }
}

void assign_line(RunConfig& cfg, std::string line) {
  const size_t hash_pos = line.find('#');
  if (hash_pos != std::string::npos) line.erase(hash_pos);
  const auto first = line.find_first_not_of(" \t\r");
  if (first == std::string::npos) return;
  const auto last = line.find_last_not_of(" \t\r");
  line = line.substr(first, last - first + 1);
  const size_t eq = line.find('=');
  if (eq == std::string::npos) throw ContractError("config: expected key=value, got: " + line);
  assign_key(cfg, line.substr(0, eq), line.substr(eq + 1));
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) assign_line(cfg, line);
  cfg.apply_mode();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str());
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) assign_line(cfg, kv);
  cfg.apply_mode();
  cfg.validate();
}

std::string default_config_text() {
  const RunConfig cfg;
  std::ostringstream s;
  s << "# modalign run configuration (defaults)\n"
    << "mode=" << mode_name(cfg.mode) << "\n"
    << "seed=" << cfg.seed << "\n"
    << "steps=" << cfg.steps << "\n"
    << "eval_every=" << cfg.eval_every << "\n"
    << "\n# model\n"
    << "d_model=" << cfg.model.d_model << "\n"
    << "n_layers=" << cfg.model.n_layers << "\n"
    << "n_heads=" << cfg.model.n_heads << "\n"
    << "d_ff=" << cfg.model.d_ff << "\n"
    << "subsample_factor=" << cfg.model.subsample_factor << "\n"
    << "dec_layers=" << cfg.model.dec_layers << "\n"
    << "max_len=" << cfg.model.max_len << "\n"
    << "dropout=" << cfg.model.dropout << "\n"
    << "tie_embeddings=" << (cfg.model.tie_embeddings ? "true" : "false") << "\n"
    << "use_positional=" << (cfg.model.use_positional ? "true" : "false") << "\n"
    << "\n# corpus\n"
    << "vocab_size=" << cfg.corpus.vocab_size << "\n"
    << "feature_dim=" << cfg.corpus.feature_dim << "\n"
    << "n_train=" << cfg.corpus.n_train << "\n"
    << "n_dev=" << cfg.corpus.n_dev << "\n"
    << "n_test=" << cfg.corpus.n_test << "\n"
    << "len_min=" << cfg.corpus.len_min << "\n"
    << "len_max=" << cfg.corpus.len_max << "\n"
    << "dur_min=" << cfg.corpus.dur_min << "\n"
    << "dur_max=" << cfg.corpus.dur_max << "\n"
    << "noise_sigma=" << cfg.corpus.noise_sigma << "\n"
    << "silence_prob=" << cfg.corpus.silence_prob << "\n"
    << "n_slot_types=" << cfg.corpus.n_slot_types << "\n"
    << "o_fraction=" << cfg.corpus.o_fraction << "\n"
    << "corpus_seed=" << cfg.corpus.seed << "\n"
    << "\n# objective\n"
    << "lambda_ctc=" << cfg.weights.ctc << "\n"
    << "lambda_mlm=" << cfg.weights.mlm << "\n"
    << "lambda_dec=" << cfg.weights.dec << "\n"
    << "mask_rate=" << cfg.mask_rate << "\n"
    << "\n# modality switch\n"
    << "p_start=" << cfg.schedule.p_start << "\n"
    << "p_end=" << cfg.schedule.p_end << "\n"
    << "switch_warmup_steps=" << cfg.schedule.warmup_steps << "\n"
    << "align_warmup_steps=" << cfg.align_warmup_steps << "\n"
    << "\n# optimizer\n"
    << "lr=" << cfg.adam.lr << "\n"
    << "beta1=" << cfg.adam.beta1 << "\n"
    << "beta2=" << cfg.adam.beta2 << "\n"
    << "adam_eps=" << cfg.adam.eps << "\n"
    << "lr_warmup_steps=" << cfg.adam.warmup_steps << "\n"
    << "lr_decay_steps=" << cfg.adam.decay_steps << "\n"
    << "clip_norm=" << cfg.adam.clip_norm << "\n";
  return s.str();
}

}  // namespace modalign

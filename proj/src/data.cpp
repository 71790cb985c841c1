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

#include "modalign/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "corpus files are little-endian; big-endian hosts need byte swaps");

namespace modalign {

namespace {

constexpr int kSilenceId = 0;  // prototype row for silence frames

void append_feature_block(std::ostream& out, const Tensor& features) {
  const int32_t rows = features.rows();
  const int32_t cols = features.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(features.values().data()),
            static_cast<std::streamsize>(features.values().size() * sizeof(double)));
}

Tensor read_feature_block(std::istream& in, const std::string& path) {
  int32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows < 1 || cols < 1)
    throw IoError("corpus: truncated or corrupt feature block in " + path);
  std::vector<double> values(static_cast<size_t>(rows) * cols);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError("corpus: truncated feature block in " + path);
  return Tensor::from({rows, cols}, values, false);
}

std::string join_ints(const std::vector<int>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(xs[i]);
  }
  return s;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::string join_segments(const std::vector<Segment>& segs) {
  std::string s;
  for (size_t i = 0; i < segs.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(segs[i].start) + ":" + std::to_string(segs[i].end);
  }
  return s;
}

std::vector<Segment> split_segments(const std::string& s) {
  std::vector<Segment> out;
  std::stringstream ss(s);
  std::string item;
  int index = 0;
  while (std::getline(ss, item, ',')) {
    const size_t colon = item.find(':');
    if (colon == std::string::npos) throw IoError("corpus: malformed segment span: " + item);
    Segment seg;
    seg.token_index = index++;
    seg.start = std::stoi(item.substr(0, colon));
    seg.end = std::stoi(item.substr(colon + 1));
    out.push_back(seg);
  }
  return out;
}

// "key=value" fields of an utt line, after "utt <split> <index>".
std::string field_value(const std::string& line, const std::string& key) {
  const std::string needle = " " + key + "=";
  const size_t pos = line.find(needle);
  if (pos == std::string::npos) throw IoError("corpus: utt record missing field: " + key);
  const size_t start = pos + needle.size();
  const size_t end = line.find(' ', start);
  return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

void CorpusConfig::validate() const {
  if (vocab_size < 1 || feature_dim < 1) throw ContractError("CorpusConfig: V and F must be positive");
  if (n_train < 0 || n_dev < 0 || n_test < 0)
    throw ContractError("CorpusConfig: split sizes must be non-negative");
  if (len_min < 1 || len_max < len_min) throw ContractError("CorpusConfig: bad length range");
  if (dur_min < 1 || dur_max < dur_min) throw ContractError("CorpusConfig: bad duration range");
  if (noise_sigma < 0.0) throw ContractError("CorpusConfig: noise_sigma must be non-negative");
  if (silence_prob < 0.0 || silence_prob > 1.0)
    throw ContractError("CorpusConfig: silence_prob in [0, 1]");
  if (n_slot_types < 1) throw ContractError("CorpusConfig: need at least one slot type");
  if (o_fraction < 0.0 || o_fraction > 1.0) throw ContractError("CorpusConfig: o_fraction in [0, 1]");
}

std::string CorpusConfig::canonical() const {
  std::ostringstream s;
  s << "vocab_size=" << vocab_size << "|feature_dim=" << feature_dim << "|n_train=" << n_train
    << "|n_dev=" << n_dev << "|n_test=" << n_test << "|len_min=" << len_min
    << "|len_max=" << len_max << "|dur_min=" << dur_min << "|dur_max=" << dur_max
    << "|noise_sigma=" << noise_sigma << "|silence_prob=" << silence_prob
    << "|n_slot_types=" << n_slot_types << "|o_fraction=" << o_fraction << "|seed=" << seed;
  return s.str();
}

uint64_t CorpusConfig::hash() const { return fnv1a64(canonical()); }

Tensor make_prototypes(const CorpusConfig& cfg, Rng& rng) {
  const int n = cfg.vocab_size + 1;
  const int f = cfg.feature_dim;
  const double min_dist = 2.0 * cfg.noise_sigma * std::sqrt(static_cast<double>(f));
  std::vector<double> rows(static_cast<size_t>(n) * f);
  for (int i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 1000)
        throw ContractError("make_prototypes: cannot separate prototypes; noise_sigma too large");
      for (int c = 0; c < f; ++c) rows[static_cast<size_t>(i) * f + c] = rng.normal();
      bool ok = true;
      for (int j = 0; j < i && ok; ++j) {
        double d2 = 0.0;
        for (int c = 0; c < f; ++c) {
          const double d = rows[static_cast<size_t>(i) * f + c] - rows[static_cast<size_t>(j) * f + c];
          d2 += d * d;
        }
        ok = d2 >= min_dist * min_dist;
      }
      if (ok) break;
    }
  }
  return Tensor::from({n, f}, rows, false);
}

std::vector<int> make_slot_map(const CorpusConfig& cfg, Rng& rng) {
  const int v = cfg.vocab_size;
  std::vector<int> order(static_cast<size_t>(v));
  for (int i = 0; i < v; ++i) order[static_cast<size_t>(i)] = i + 1;
  for (int i = v - 1; i > 0; --i) std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.uniform_int(i + 1))]);

  const int n_o = static_cast<int>(std::llround(cfg.o_fraction * v));
  std::vector<int> map(static_cast<size_t>(v) + 1, 0);
  for (int i = 0; i < v; ++i) {
    const int token = order[static_cast<size_t>(i)];
    map[static_cast<size_t>(token)] = i < n_o ? 0 : 1 + rng.uniform_int(cfg.n_slot_types);
  }
  return map;
}

std::vector<int> assign_slots(const std::vector<int>& tokens, const std::vector<int>& slot_map) {
  std::vector<int> slots;
  slots.reserve(tokens.size());
  for (int t : tokens) {
    if (t < 1 || t >= static_cast<int>(slot_map.size()))
      throw IndexError("assign_slots: token id " + std::to_string(t) + " outside the slot map");
    slots.push_back(slot_map[static_cast<size_t>(t)]);
  }
  return slots;
}

Utterance render_utterance(const std::vector<int>& tokens, const CorpusConfig& cfg,
                           const Tensor& prototypes, Rng& rng) {
  if (tokens.empty()) throw ContractError("render_utterance: empty token sequence");
  for (int t : tokens)
    if (t < 1 || t > cfg.vocab_size)
      throw IndexError("render_utterance: token id " + std::to_string(t) + " outside 1.." +
                       std::to_string(cfg.vocab_size));
  if (prototypes.rows() != cfg.vocab_size + 1 || prototypes.cols() != cfg.feature_dim)
    throw ShapeError("render_utterance: prototype table is " +
                     shape_str({prototypes.rows(), prototypes.cols()}) + ", expected " +
                     shape_str({cfg.vocab_size + 1, cfg.feature_dim}));

  const int dur_span = cfg.dur_max - cfg.dur_min + 1;
  const int lead = rng.bernoulli(cfg.silence_prob) ? cfg.dur_min + rng.uniform_int(dur_span) : 0;
  std::vector<int> durations(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) durations[i] = cfg.dur_min + rng.uniform_int(dur_span);
  const int trail = rng.bernoulli(cfg.silence_prob) ? cfg.dur_min + rng.uniform_int(dur_span) : 0;

  int total = lead + trail;
  for (int d : durations) total += d;

  Utterance utt;
  utt.tokens = tokens;
  const int f = cfg.feature_dim;
  std::vector<double> rows(static_cast<size_t>(total) * f);
  int frame = 0;
  auto emit = [&](int proto_row, int n_frames) {
    for (int t = 0; t < n_frames; ++t, ++frame)
      for (int c = 0; c < f; ++c)
        rows[static_cast<size_t>(frame) * f + c] =
            prototypes.at(static_cast<int64_t>(proto_row) * f + c) + cfg.noise_sigma * rng.normal();
  };
  emit(kSilenceId, lead);
  for (size_t i = 0; i < tokens.size(); ++i) {
    Segment seg;
    seg.token_index = static_cast<int>(i);
    seg.start = frame;
    emit(tokens[i], durations[i]);
    seg.end = frame;
    utt.true_segments.push_back(seg);
  }
  emit(kSilenceId, trail);
  utt.features = Tensor::from({total, f}, rows, false);
  return utt;
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.config = cfg;
  Rng proto_rng(Rng::derive(cfg.seed, "proto"));
  corpus.prototypes = make_prototypes(cfg, proto_rng);
  Rng slot_rng(Rng::derive(cfg.seed, "slots"));
  corpus.slot_map = make_slot_map(cfg, slot_rng);

  auto fill = [&](std::vector<Utterance>& out, const char* split, int count) {
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      Rng rng(Rng::derive(cfg.seed, split, static_cast<uint64_t>(i)));
      const int len = cfg.len_min + rng.uniform_int(cfg.len_max - cfg.len_min + 1);
      std::vector<int> tokens(static_cast<size_t>(len));
      for (int& t : tokens) t = 1 + rng.uniform_int(cfg.vocab_size);
      Utterance utt = render_utterance(tokens, cfg, corpus.prototypes, rng);
      utt.slots = assign_slots(tokens, corpus.slot_map);
      out.push_back(std::move(utt));
    }
  };
  fill(corpus.train, "train", cfg.n_train);
  fill(corpus.dev, "dev", cfg.n_dev);
  fill(corpus.test, "test", cfg.n_test);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const CorpusConfig& cfg = corpus.config;

  std::ofstream manifest(dir + "/manifest.txt");
  if (!manifest) throw IoError("corpus: cannot write " + dir + "/manifest.txt");
  manifest << "format=modalign-corpus-v1\n";
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cfg.hash()));
  manifest << "config_hash=" << hex << "\n";
  manifest << "vocab_size=" << cfg.vocab_size << "\n";
  manifest << "feature_dim=" << cfg.feature_dim << "\n";
  manifest << "n_train=" << cfg.n_train << "\n";
  manifest << "n_dev=" << cfg.n_dev << "\n";
  manifest << "n_test=" << cfg.n_test << "\n";
  manifest << "len_min=" << cfg.len_min << "\n";
  manifest << "len_max=" << cfg.len_max << "\n";
  manifest << "dur_min=" << cfg.dur_min << "\n";
  manifest << "dur_max=" << cfg.dur_max << "\n";
  manifest << "noise_sigma=" << cfg.noise_sigma << "\n";
  manifest << "silence_prob=" << cfg.silence_prob << "\n";
  manifest << "n_slot_types=" << cfg.n_slot_types << "\n";
  manifest << "o_fraction=" << cfg.o_fraction << "\n";
  manifest << "seed=" << cfg.seed << "\n";
  std::vector<int> map_tail(corpus.slot_map.begin() + 1, corpus.slot_map.end());
  manifest << "slot_map=" << join_ints(map_tail) << "\n";

  auto write_split = [&](const std::vector<Utterance>& utts, const char* split) {
    std::ofstream feats(dir + "/" + split + ".feats", std::ios::binary);
    if (!feats) throw IoError(std::string("corpus: cannot write ") + dir + "/" + split + ".feats");
    for (size_t i = 0; i < utts.size(); ++i) {
      const Utterance& u = utts[i];
      manifest << "utt " << split << " " << i << " tokens=" << join_ints(u.tokens)
               << " slots=" << join_ints(u.slots) << " segments=" << join_segments(u.true_segments)
               << "\n";
      append_feature_block(feats, u.features);
    }
  };
  write_split(corpus.train, "train");
  write_split(corpus.dev, "dev");
  write_split(corpus.test, "test");

  std::ofstream protos(dir + "/prototypes.feats", std::ios::binary);
  if (!protos) throw IoError("corpus: cannot write " + dir + "/prototypes.feats");
  append_feature_block(protos, corpus.prototypes);
}

Corpus load_corpus(const std::string& dir) {
  std::ifstream manifest(dir + "/manifest.txt");
  if (!manifest) throw IoError("corpus: cannot read " + dir + "/manifest.txt");

  Corpus corpus;
  CorpusConfig& cfg = corpus.config;
  std::string recorded_hash;
  std::string line;
  struct Record {
    std::string split;
    Utterance utt;
  };
  std::vector<Record> records;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    if (line.rfind("utt ", 0) == 0) {
      std::stringstream ss(line);
      std::string tag, split;
      int index = 0;
      ss >> tag >> split >> index;
      Record rec;
      rec.split = split;
      rec.utt.tokens = split_ints(field_value(line, "tokens"));
      rec.utt.slots = split_ints(field_value(line, "slots"));
      rec.utt.true_segments = split_segments(field_value(line, "segments"));
      records.push_back(std::move(rec));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("corpus: malformed manifest line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "modalign-corpus-v1") throw IoError("corpus: unknown format: " + value);
    } else if (key == "config_hash") {
      recorded_hash = value;
    } else if (key == "vocab_size") {
      cfg.vocab_size = std::stoi(value);
    } else if (key == "feature_dim") {
      cfg.feature_dim = std::stoi(value);
    } else if (key == "n_train") {
      cfg.n_train = std::stoi(value);
    } else if (key == "n_dev") {
      cfg.n_dev = std::stoi(value);
    } else if (key == "n_test") {
      cfg.n_test = std::stoi(value);
    } else if (key == "len_min") {
      cfg.len_min = std::stoi(value);
    } else if (key == "len_max") {
      cfg.len_max = std::stoi(value);
    } else if (key == "dur_min") {
      cfg.dur_min = std::stoi(value);
    } else if (key == "dur_max") {
      cfg.dur_max = std::stoi(value);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = std::stod(value);
    } else if (key == "silence_prob") {
      cfg.silence_prob = std::stod(value);
    } else if (key == "n_slot_types") {
      cfg.n_slot_types = std::stoi(value);
    } else if (key == "o_fraction") {
      cfg.o_fraction = std::stod(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    } else if (key == "slot_map") {
      std::vector<int> tail = split_ints(value);
      corpus.slot_map.assign(1, 0);
      corpus.slot_map.insert(corpus.slot_map.end(), tail.begin(), tail.end());
    } else {
      throw IoError("corpus: unknown manifest key: " + key);
    }
  }
  cfg.validate();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cfg.hash()));
  if (recorded_hash != hex)
    throw IoError("corpus: manifest config_hash " + recorded_hash + " does not match the config (" +
                  hex + ")");
  if (static_cast<int>(corpus.slot_map.size()) != cfg.vocab_size + 1)
    throw IoError("corpus: slot_map length does not match vocab_size");

  auto read_split = [&](std::vector<Utterance>& out, const char* split, int count) {
    const std::string path = dir + "/" + split + ".feats";
    std::ifstream feats(path, std::ios::binary);
    if (!feats) throw IoError("corpus: cannot read " + path);
    int seen = 0;
    for (Record& rec : records) {
      if (rec.split != split) continue;
      rec.utt.features = read_feature_block(feats, path);
      if (rec.utt.features.cols() != cfg.feature_dim)
        throw IoError("corpus: feature block width mismatch in " + path);
      out.push_back(std::move(rec.utt));
      ++seen;
    }
    if (seen != count)
      throw IoError("corpus: " + std::string(split) + " has " + std::to_string(seen) +
                    " records, manifest promised " + std::to_string(count));
  };
  read_split(corpus.train, "train", cfg.n_train);
  read_split(corpus.dev, "dev", cfg.n_dev);
  read_split(corpus.test, "test", cfg.n_test);

  std::ifstream protos(dir + "/prototypes.feats", std::ios::binary);
  if (!protos) throw IoError("corpus: cannot read " + dir + "/prototypes.feats");
  corpus.prototypes = read_feature_block(protos, dir + "/prototypes.feats");
  if (corpus.prototypes.rows() != cfg.vocab_size + 1 ||
      corpus.prototypes.cols() != cfg.feature_dim)
    throw IoError("corpus: prototype table shape mismatch");
  return corpus;
}

}  // namespace modalign

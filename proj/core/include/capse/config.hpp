#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace capse {

// Run settings shared by the command-line pipelines. Precedence is
// CLI flag > --config file > per-dataset defaults > these built-ins.
struct RunConfig {
  std::string dataset_dir;
  std::string out_dir = "out";

  std::size_t k = 100;          // embedding dimension
  std::size_t n_filters = 400;  // N
  std::size_t d = 10;           // output capsule size
  int m = 1;                    // routing iterations
  std::size_t batch_size = 128;
  int epochs = 50;
  int eval_every = 10;
  double lr = 1e-5;
  double delta = 0.8;  // decay for query/user profile embeddings
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  std::string init = "random";  // random | transe | pretrained:P | synset:P
  std::string task = "kg";      // kg | rerank

  // TransE pretraining settings (the pretrain command's --lr/--epochs/
  // --margin map onto these).
  double margin = 5.0;
  double transe_lr = 5e-3;
  int transe_epochs = 3000;
  std::string transe_norm = "l1";  // l1 | l2
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Flat "key=value" lines; '#' starts a comment; blank lines ignored.
KeyValues parse_config_file(const std::filesystem::path& path);

// Applies key=value pairs in order. Unknown keys or unparsable values throw.
void apply_key_values(RunConfig& cfg, const KeyValues& kvs);

// Tuned per-dataset profiles keyed by lowercased dataset name
// (wn18rr, fb15k-237, search17). Returns false for unknown names.
bool apply_dataset_profile(RunConfig& cfg, const std::string& dataset_name);

// Loads <config_dir>/<dataset_name>.conf when present (overrides the
// built-in profile with the shipped defaults file).
bool apply_dataset_defaults_file(RunConfig& cfg,
                                 const std::filesystem::path& config_dir,
                                 const std::string& dataset_name);

// Throws Error when an invariant is violated (k, N, d, m, batch >= 1,
// lr > 0, 0 < delta < 1, known task/init).
void validate(const RunConfig& cfg);

}  // namespace capse

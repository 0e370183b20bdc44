#pragma once

#include <string>
#include <vector>

#include "mqsa/model.hpp"
#include "mqsa/trainer.hpp"

namespace mqsa {

// Flat key=value run configuration shared by every command. Every output
// directory receives the resolved text so runs are self-describing.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  int k = 1;            // transition time span
  std::string dataset;  // sequence file
  std::string out_dir = ".";
  std::string preset;   // "", "mqsa-ted", or "sasrec"
  std::vector<Index> cutoffs = {5, 10, 20};
  bool grouped = false;
};

// Assigns one key; unknown keys or unparsable values raise ConfigError
// naming the key. Keys: d, n, num_blocks, L, alpha, dropout, tau,
// lambda_kd, lambda_l2, learning_rate, batch_size, max_epochs, patience,
// seed, k, dataset, out, model, cutoffs (comma-separated), grouped.
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value);

// Line-oriented `key = value` text with `#` comments and blank lines.
RunConfig parse_config_text(const std::string& text);
RunConfig load_run_config(const std::string& path);

// `model = sasrec` forces alpha = 1 and lambda_kd = 0; `mqsa-ted` keeps
// the configured values. Anything else is a ConfigError.
void apply_preset(RunConfig& cfg);

// Serialized form; parse_config_text(config_text(c)) reproduces c.
std::string config_text(const RunConfig& cfg);

// Raw `user<TAB>item<TAB>timestamp` triples (string ids, numeric
// timestamps) -> `sequences.txt` in the dataio format plus `remap.tsv`
// (`kind<TAB>original<TAB>id` rows). Per-user events are ordered by
// timestamp with a stable sort, ids numbered from 1 in first-appearance
// order.
void cmd_prepare(const std::string& raw_path, const std::string& out_dir);

// Trains per the config; writes checkpoint.bin, history.csv, config.txt.
void cmd_train(const RunConfig& cfg);

// Loads the checkpoint, evaluates the named phase ("valid" or "test"),
// writes report.csv and config.txt. Grouped reports need the test phase.
// The checkpoint vocabulary must match the dataset's.
void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& phase);

// Scores with "pop" (global training popularity) or "transition" (outgoing
// counts of the last input item) through the same evaluation path.
void cmd_baseline(const RunConfig& cfg, const std::string& name,
                  const std::string& phase);

// Merges labeled report CSVs into `analysis.csv` rows
// `method,metric,cutoff,group,value`. Reports with mismatched cutoff sets
// raise ConfigError.
void cmd_analyze(const std::vector<std::string>& labels,
                 const std::vector<std::string>& report_paths,
                 const std::string& out_dir);

}  // namespace mqsa

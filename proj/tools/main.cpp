#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mqsa/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string dataset;
  std::string out_dir;
  std::string seed;
  std::string cutoffs;
  bool grouped = false;
  std::vector<std::string> sets;  // key=value overrides
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_eval_flags) {
  cmd->add_option("--config", flags.config_path, "key = value config file");
  cmd->add_option("--dataset", flags.dataset, "sequence file");
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "run seed");
  cmd->add_option("--set", flags.sets, "extra key=value override")
      ->delimiter(0);
  if (with_eval_flags) {
    cmd->add_option("--cutoffs", flags.cutoffs, "comma-separated cutoffs");
    cmd->add_flag("--grouped", flags.grouped,
                  "group by transition frequency (test phase)");
  }
}

// File first, then flags, then --set pairs, so the command line wins.
mqsa::RunConfig resolve(const CommonFlags& flags) {
  mqsa::RunConfig cfg;
  if (!flags.config_path.empty())
    cfg = mqsa::load_run_config(flags.config_path);
  if (!flags.dataset.empty()) cfg.dataset = flags.dataset;
  if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
  if (!flags.seed.empty()) mqsa::set_config_key(cfg, "seed", flags.seed);
  if (!flags.cutoffs.empty())
    mqsa::set_config_key(cfg, "cutoffs", flags.cutoffs);
  if (flags.grouped) cfg.grouped = true;
  for (const std::string& pair : flags.sets) {
    std::size_t eq = pair.find('=');
    if (eq == std::string::npos)
      throw mqsa::ConfigError("--set expects key=value, got '" + pair + "'");
    std::string key = pair.substr(0, eq);
    std::string value = pair.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(0, 1);
    mqsa::set_config_key(cfg, key, value);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential recommender: multi-query self-attention with "
               "transition-aware embedding distillation"};
  app.require_subcommand(1);

  std::string raw_path;
  CLI::App* prepare =
      app.add_subcommand("prepare", "raw triples -> sequences + id map");
  prepare->add_option("raw", raw_path, "user<TAB>item<TAB>timestamp file")
      ->required();
  std::string prepare_out = ".";
  prepare->add_option("--out", prepare_out, "output directory");

  CommonFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "fit a model");
  add_common(train, train_flags, false);

  CommonFlags eval_flags;
  std::string checkpoint_path, eval_phase = "test";
  CLI::App* evaluate = app.add_subcommand("evaluate", "rank with a checkpoint");
  evaluate->add_option("checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  evaluate->add_option("--phase", eval_phase, "valid|test");
  add_common(evaluate, eval_flags, true);

  CommonFlags base_flags;
  std::string baseline_name, base_phase = "test";
  CLI::App* baseline = app.add_subcommand("baseline", "pop or transition");
  baseline->add_option("name", baseline_name, "pop|transition")->required();
  baseline->add_option("--phase", base_phase, "valid|test");
  add_common(baseline, base_flags, true);

  std::vector<std::string> report_paths;
  std::string labels_arg, analyze_out = ".";
  CLI::App* analyze =
      app.add_subcommand("analyze", "merge reports into plot data");
  analyze->add_option("reports", report_paths, "report.csv files")
      ->required();
  analyze->add_option("--labels", labels_arg,
                      "comma-separated method labels (default: file stems)");
  analyze->add_option("--out", analyze_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      mqsa::cmd_prepare(raw_path, prepare_out);
    } else if (train->parsed()) {
      mqsa::cmd_train(resolve(train_flags));
    } else if (evaluate->parsed()) {
      mqsa::cmd_evaluate(resolve(eval_flags), checkpoint_path, eval_phase);
    } else if (baseline->parsed()) {
      mqsa::cmd_baseline(resolve(base_flags), baseline_name, base_phase);
    } else if (analyze->parsed()) {
      std::vector<std::string> labels;
      if (!labels_arg.empty()) {
        std::istringstream in(labels_arg);
        std::string label;
        while (std::getline(in, label, ',')) labels.push_back(label);
      }
      mqsa::cmd_analyze(labels, report_paths, analyze_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include "mqsa/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mqsa/dataio.hpp"
#include "mqsa/evaluator.hpp"
#include "mqsa/transition.hpp"

namespace mqsa {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad value for " + key + ": '" + value + "'");
}

std::vector<Index> parse_cutoffs(const std::string& value) {
  std::vector<Index> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ','))
    out.push_back(parse_int<Index>("cutoffs", trim(item)));
  if (out.empty()) throw ConfigError("bad value for cutoffs: '" + value + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void write_run_config(const RunConfig& cfg) {
  write_text(cfg.out_dir + "/config.txt", config_text(cfg));
}

struct LoadedSplit {
  InteractionDataset dataset;
  SplitDataset split;
};

LoadedSplit load_split(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("dataset is not set");
  LoadedSplit out;
  out.dataset = load_sequences(cfg.dataset);
  out.split = leave_one_out_split(out.dataset);
  return out;
}

EvalPhase parse_phase(const std::string& phase) {
  if (phase == "valid") return EvalPhase::kValid;
  if (phase == "test") return EvalPhase::kTest;
  throw ConfigError("unknown phase '" + phase + "' (valid|test)");
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "d") cfg.model.d = parse_int<Index>(key, value);
  else if (key == "n") cfg.model.n = parse_int<Index>(key, value);
  else if (key == "num_blocks")
    cfg.model.num_blocks = parse_int<Index>(key, value);
  else if (key == "L") cfg.model.L = parse_int<Index>(key, value);
  else if (key == "alpha") cfg.model.alpha = parse_double(key, value);
  else if (key == "dropout") cfg.model.dropout_rate = parse_double(key, value);
  else if (key == "tau") cfg.model.tau = parse_double(key, value);
  else if (key == "lambda_kd") cfg.model.lambda_kd = parse_double(key, value);
  else if (key == "lambda_l2") cfg.model.lambda_l2 = parse_double(key, value);
  else if (key == "learning_rate")
    cfg.train.learning_rate = parse_double(key, value);
  else if (key == "batch_size")
    cfg.train.batch_size = parse_int<Index>(key, value);
  else if (key == "max_epochs")
    cfg.train.max_epochs = parse_int<Index>(key, value);
  else if (key == "patience") cfg.train.patience = parse_int<Index>(key, value);
  else if (key == "seed") cfg.train.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "k") cfg.k = parse_int<int>(key, value);
  else if (key == "dataset") cfg.dataset = value;
  else if (key == "out") cfg.out_dir = value;
  else if (key == "model") cfg.preset = value;
  else if (key == "cutoffs") cfg.cutoffs = parse_cutoffs(value);
  else if (key == "grouped") cfg.grouped = parse_bool(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) +
                        ": expected key = value");
    set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_preset(RunConfig& cfg) {
  if (cfg.preset.empty() || cfg.preset == "mqsa-ted") return;
  if (cfg.preset == "sasrec") {
    cfg.model.alpha = 1.0;
    cfg.model.lambda_kd = 0.0;
    return;
  }
  throw ConfigError("unknown model preset '" + cfg.preset + "'");
}

std::string config_text(const RunConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  kv("model", cfg.preset);
  kv("dataset", cfg.dataset);
  kv("out", cfg.out_dir);
  kv("d", std::to_string(cfg.model.d));
  kv("n", std::to_string(cfg.model.n));
  kv("num_blocks", std::to_string(cfg.model.num_blocks));
  kv("L", std::to_string(cfg.model.L));
  kv("alpha", format_double(cfg.model.alpha));
  kv("dropout", format_double(cfg.model.dropout_rate));
  kv("tau", format_double(cfg.model.tau));
  kv("lambda_kd", format_double(cfg.model.lambda_kd));
  kv("lambda_l2", format_double(cfg.model.lambda_l2));
  kv("learning_rate", format_double(cfg.train.learning_rate));
  kv("batch_size", std::to_string(cfg.train.batch_size));
  kv("max_epochs", std::to_string(cfg.train.max_epochs));
  kv("patience", std::to_string(cfg.train.patience));
  kv("seed", std::to_string(cfg.train.seed));
  kv("k", std::to_string(cfg.k));
  std::string cuts;
  for (std::size_t i = 0; i < cfg.cutoffs.size(); ++i)
    cuts += (i ? "," : "") + std::to_string(cfg.cutoffs[i]);
  kv("cutoffs", cuts);
  kv("grouped", cfg.grouped ? "true" : "false");
  return out;
}

void cmd_prepare(const std::string& raw_path, const std::string& out_dir) {
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + raw_path);

  struct Event {
    double timestamp;
    int item;
  };
  std::map<std::string, int> user_ids, item_ids;
  std::vector<std::string> user_names, item_names;
  std::vector<std::vector<Event>> events;

  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw ParseError("line " + std::to_string(number) +
                       ": expected user<TAB>item<TAB>timestamp");
    std::string user = trim(line.substr(0, t1));
    std::string item = trim(line.substr(t1 + 1, t2 - t1 - 1));
    std::string stamp = trim(line.substr(t2 + 1));
    if (user.empty() || item.empty())
      throw ParseError("line " + std::to_string(number) + ": empty id");
    char* end = nullptr;
    double ts = std::strtod(stamp.c_str(), &end);
    if (stamp.empty() || end != stamp.c_str() + stamp.size())
      throw ParseError("line " + std::to_string(number) + ": bad timestamp '" +
                       stamp + "'");

    auto [uit, unew] = user_ids.try_emplace(user, 0);
    if (unew) {
      uit->second = static_cast<int>(user_names.size()) + 1;
      user_names.push_back(user);
      events.emplace_back();
    }
    auto [iit, inew] = item_ids.try_emplace(item, 0);
    if (inew) {
      iit->second = static_cast<int>(item_names.size()) + 1;
      item_names.push_back(item);
    }
    events[static_cast<std::size_t>(uit->second - 1)].push_back(
        Event{ts, iit->second});
  }
  if (events.empty()) throw DatasetError("no interactions in " + raw_path);

  InteractionDataset ds;
  ds.item_count = static_cast<int>(item_names.size());
  for (std::size_t u = 0; u < events.size(); ++u) {
    std::stable_sort(events[u].begin(), events[u].end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp < b.timestamp;
                     });
    std::vector<int> seq;
    seq.reserve(events[u].size());
    for (const Event& e : events[u]) seq.push_back(e.item);
    ds.user_ids.push_back(static_cast<std::int64_t>(u) + 1);
    ds.sequences.push_back(std::move(seq));
  }

  ensure_dir(out_dir);
  write_sequences(ds, out_dir + "/sequences.txt");
  std::string remap;
  for (std::size_t u = 0; u < user_names.size(); ++u)
    remap += "user\t" + user_names[u] + '\t' + std::to_string(u + 1) + '\n';
  for (std::size_t i = 0; i < item_names.size(); ++i)
    remap += "item\t" + item_names[i] + '\t' + std::to_string(i + 1) + '\n';
  write_text(out_dir + "/remap.tsv", remap);
}

void cmd_train(const RunConfig& run) {
  RunConfig cfg = run;
  apply_preset(cfg);
  cfg.model.validate();
  cfg.train.validate();
  LoadedSplit data = load_split(cfg);
  TransitionGraph graph =
      build_transition_graph(data.split.train, data.split.item_count, cfg.k);
  TrainResult result = train(cfg.model, cfg.train, data.split, graph);
  ensure_dir(cfg.out_dir);
  save_checkpoint(cfg.out_dir + "/checkpoint.bin", cfg.model, result.params);
  write_history(result.history, cfg.out_dir + "/history.csv");
  write_run_config(cfg);
}

void cmd_evaluate(const RunConfig& run, const std::string& checkpoint_path,
                  const std::string& phase) {
  RunConfig cfg = run;
  EvalPhase p = parse_phase(phase);
  if (cfg.grouped && p != EvalPhase::kTest)
    throw ConfigError("grouped reports need phase = test");
  auto [mcfg, params] = load_checkpoint(checkpoint_path);
  LoadedSplit data = load_split(cfg);
  if (params.item_count != data.split.item_count)
    throw CheckpointError(
        "checkpoint covers " + std::to_string(params.item_count) +
        " items but the dataset has " +
        std::to_string(data.split.item_count));
  TransitionGraph graph;
  if (cfg.grouped)
    graph =
        build_transition_graph(data.split.train, data.split.item_count, cfg.k);
  EvalReport report = evaluate(params, mcfg, data.split, p, cfg.cutoffs,
                               cfg.grouped ? &graph : nullptr);
  ensure_dir(cfg.out_dir);
  write_report(report, cfg.out_dir + "/report.csv");
  write_run_config(cfg);
}

void cmd_baseline(const RunConfig& run, const std::string& name,
                  const std::string& phase) {
  RunConfig cfg = run;
  EvalPhase p = parse_phase(phase);
  if (cfg.grouped && p != EvalPhase::kTest)
    throw ConfigError("grouped reports need phase = test");
  LoadedSplit data = load_split(cfg);
  TransitionGraph graph =
      build_transition_graph(data.split.train, data.split.item_count, cfg.k);
  Scorer scorer;
  if (name == "pop") scorer = pop_scorer(data.split);
  else if (name == "transition") scorer = transition_scorer(graph);
  else throw ConfigError("unknown baseline '" + name + "' (pop|transition)");
  EvalReport report = evaluate_scorer(scorer, data.split, p, cfg.cutoffs,
                                      cfg.grouped ? &graph : nullptr);
  ensure_dir(cfg.out_dir);
  write_report(report, cfg.out_dir + "/report.csv");
  write_run_config(cfg);
}

void cmd_analyze(const std::vector<std::string>& labels,
                 const std::vector<std::string>& report_paths,
                 const std::string& out_dir) {
  if (report_paths.empty()) throw ConfigError("analyze needs >= 1 report");
  if (!labels.empty() && labels.size() != report_paths.size())
    throw ConfigError("got " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(report_paths.size()) +
                      " reports");

  std::string merged = "method,metric,cutoff,group,value\n";
  std::string sources;
  std::vector<std::string> first_cutoffs;
  for (std::size_t r = 0; r < report_paths.size(); ++r) {
    const std::string label =
        labels.empty() ? stem_of(report_paths[r]) : labels[r];
    sources += label + '\t' + report_paths[r] + '\n';
    std::ifstream in(report_paths[r], std::ios::binary);
    if (!in) throw DatasetError("cannot open " + report_paths[r]);
    std::string line;
    if (!std::getline(in, line) ||
        trim(line) != "metric,cutoff,group,value,count")
      throw ParseError(report_paths[r] + ": not a report file");
    std::vector<std::string> cutoffs;
    int number = 1;
    while (std::getline(in, line)) {
      ++number;
      if (trim(line).empty()) continue;
      std::vector<std::string> fields;
      std::istringstream row(line);
      std::string field;
      while (std::getline(row, field, ',')) fields.push_back(field);
      if (fields.size() != 5)
        throw ParseError(report_paths[r] + " line " + std::to_string(number) +
                         ": expected 5 fields");
      if (std::find(cutoffs.begin(), cutoffs.end(), fields[1]) ==
          cutoffs.end())
        cutoffs.push_back(fields[1]);
      merged += label + ',' + fields[0] + ',' + fields[1] + ',' + fields[2] +
                ',' + fields[3] + '\n';
    }
    std::sort(cutoffs.begin(), cutoffs.end());
    if (r == 0) first_cutoffs = cutoffs;
    else if (cutoffs != first_cutoffs)
      throw ConfigError(report_paths[r] +
                        ": cutoffs differ from the first report");
  }
  ensure_dir(out_dir);
  write_text(out_dir + "/analysis.csv", merged);
  write_text(out_dir + "/sources.tsv", sources);
}

}  // namespace mqsa

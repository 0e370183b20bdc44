#include "mqsa/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mqsa {
namespace {

constexpr Index kEvalBatch = 256;
const char* const kBucketLabels[] = {"0", "1", "2", "3", "ge4"};

struct UserCase {
  int user = 0;
  std::vector<int> input;
  int target = 0;
  std::vector<int> exclusions;
};

std::vector<UserCase> build_cases(const SplitDataset& split, EvalPhase phase) {
  std::vector<UserCase> cases;
  for (int u = 0; u < split.user_count(); ++u) {
    if (!split.eligible(u)) continue;
    UserCase c;
    c.user = u;
    c.input = split.train[static_cast<std::size_t>(u)];
    c.exclusions = c.input;
    if (phase == EvalPhase::kValid) {
      c.target = split.valid_target[static_cast<std::size_t>(u)];
    } else {
      c.input.push_back(split.valid_target[static_cast<std::size_t>(u)]);
      c.exclusions.push_back(split.valid_target[static_cast<std::size_t>(u)]);
      c.target = split.test_target[static_cast<std::size_t>(u)];
    }
    c.exclusions.erase(
        std::remove(c.exclusions.begin(), c.exclusions.end(), c.target),
        c.exclusions.end());
    cases.push_back(std::move(c));
  }
  return cases;
}

int bucket_of(const TransitionGraph& graph, const SplitDataset& split,
              int user) {
  int freq = transition_frequency(
      graph, split.valid_target[static_cast<std::size_t>(user)],
      split.test_target[static_cast<std::size_t>(user)]);
  return std::min(freq, 4);
}

EvalReport aggregate(const std::vector<UserCase>& cases,
                     const std::vector<Index>& ranks,
                     const SplitDataset& split, EvalPhase phase,
                     const std::vector<Index>& cutoffs,
                     const TransitionGraph* grouping) {
  if (cutoffs.empty()) throw ParameterError("need at least one cutoff");
  for (Index n : cutoffs)
    if (n < 1) throw ParameterError("cutoffs must be >= 1");
  if (grouping != nullptr && phase != EvalPhase::kTest)
    throw ContractError("grouped evaluation needs the test phase");

  EvalReport report;
  report.cutoffs = cutoffs;
  report.all.label = "all";
  report.all.means.resize(cutoffs.size());
  if (grouping != nullptr) {
    report.groups.resize(5);
    for (int b = 0; b < 5; ++b) {
      report.groups[static_cast<std::size_t>(b)].label = kBucketLabels[b];
      report.groups[static_cast<std::size_t>(b)].means.resize(cutoffs.size());
    }
  }

  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::vector<EvalGroup*> sinks = {&report.all};
    if (grouping != nullptr)
      sinks.push_back(&report.groups[static_cast<std::size_t>(
          bucket_of(*grouping, split, cases[i].user))]);
    for (EvalGroup* g : sinks) {
      ++g->count;
      for (std::size_t c = 0; c < cutoffs.size(); ++c) {
        MetricPoint m = metrics_at(ranks[i], cutoffs[c]);
        g->means[c].hr += m.hr;
        g->means[c].ndcg += m.ndcg;
      }
    }
  }
  auto finish = [](EvalGroup& g) {
    if (g.count == 0) return;
    for (MetricPoint& m : g.means) {
      m.hr /= static_cast<double>(g.count);
      m.ndcg /= static_cast<double>(g.count);
    }
  };
  finish(report.all);
  for (EvalGroup& g : report.groups) finish(g);
  return report;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Index rank_of_target(const Vector& scores, int target,
                     const std::vector<int>& exclusions) {
  const Index item_count = scores.size();
  if (target < 1 || target > item_count)
    throw ParameterError("target " + std::to_string(target) + " outside 1.." +
                         std::to_string(item_count));
  std::vector<char> excluded(static_cast<std::size_t>(item_count) + 1, 0);
  for (int id : exclusions) {
    if (id < 1 || id > item_count)
      throw ParameterError("excluded id " + std::to_string(id) +
                           " outside 1.." + std::to_string(item_count));
    excluded[static_cast<std::size_t>(id)] = 1;
  }
  if (excluded[static_cast<std::size_t>(target)])
    throw ContractError("target is excluded from its own ranking");

  const double target_score = scores(target - 1);
  Index rank = 1;
  for (int id = 1; id <= item_count; ++id) {
    if (id == target || excluded[static_cast<std::size_t>(id)]) continue;
    const double s = scores(id - 1);
    if (s > target_score || (s == target_score && id < target)) ++rank;
  }
  return rank;
}

MetricPoint metrics_at(Index rank, Index cutoff) {
  if (rank < 1) throw ContractError("ranks are 1-based");
  if (cutoff < 1) throw ParameterError("cutoff must be >= 1");
  MetricPoint m;
  if (rank <= cutoff) {
    m.hr = 1.0;
    m.ndcg = 1.0 / std::log2(static_cast<double>(rank) + 1.0);
  }
  return m;
}

EvalReport evaluate_scorer(const Scorer& scorer, const SplitDataset& split,
                           EvalPhase phase, const std::vector<Index>& cutoffs,
                           const TransitionGraph* grouping) {
  std::vector<UserCase> cases = build_cases(split, phase);
  std::vector<Index> ranks;
  ranks.reserve(cases.size());
  for (const UserCase& c : cases) {
    Vector scores = scorer(c.input);
    if (scores.size() != split.item_count)
      throw DimensionError("scorer returned " + std::to_string(scores.size()) +
                           " scores for " + std::to_string(split.item_count) +
                           " items");
    ranks.push_back(rank_of_target(scores, c.target, c.exclusions));
  }
  return aggregate(cases, ranks, split, phase, cutoffs, grouping);
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg,
                    const SplitDataset& split, EvalPhase phase,
                    const std::vector<Index>& cutoffs,
                    const TransitionGraph* grouping) {
  cfg.validate();
  if (params.item_count != split.item_count)
    throw DimensionError("params cover " + std::to_string(params.item_count) +
                         " items, split has " +
                         std::to_string(split.item_count));
  std::vector<UserCase> cases = build_cases(split, phase);
  std::vector<Index> ranks;
  ranks.reserve(cases.size());

  for (std::size_t begin = 0; begin < cases.size();
       begin += static_cast<std::size_t>(kEvalBatch)) {
    std::size_t end =
        std::min(cases.size(), begin + static_cast<std::size_t>(kEvalBatch));
    const Index rows = static_cast<Index>(end - begin);
    IntMatrix items = IntMatrix::Zero(rows, cfg.n);
    for (std::size_t i = begin; i < end; ++i) {
      const std::vector<int>& input = cases[i].input;
      const Index take =
          std::min<Index>(cfg.n, static_cast<Index>(input.size()));
      for (Index t = 0; t < take; ++t)
        items(static_cast<Index>(i - begin), cfg.n - take + t) =
            input[input.size() - static_cast<std::size_t>(take - t)];
    }
    Tape tape;
    ParamLeaves leaves = bind_params(tape, params);
    SplitMix64 unused(0);
    ForwardOutput fwd = mqsa_forward(leaves, cfg, items, unused, false);
    const Matrix& reps = fwd.seq_reps.value();
    Matrix finals(rows, cfg.d);
    for (Index r = 0; r < rows; ++r)
      finals.row(r) = reps.row(r * cfg.n + cfg.n - 1);
    Matrix scores = score_items_value(finals, params);
    for (std::size_t i = begin; i < end; ++i)
      ranks.push_back(
          rank_of_target(scores.row(static_cast<Index>(i - begin)).transpose(),
                         cases[i].target, cases[i].exclusions));
  }
  return aggregate(cases, ranks, split, phase, cutoffs, grouping);
}

Scorer pop_scorer(const SplitDataset& split) {
  Vector counts = Vector::Zero(split.item_count);
  for (const std::vector<int>& seq : split.train)
    for (int id : seq) counts(id - 1) += 1.0;
  return [counts](const std::vector<int>&) { return counts; };
}

Scorer transition_scorer(const TransitionGraph& graph) {
  const TransitionGraph* g = &graph;
  return [g](const std::vector<int>& input) {
    if (input.empty()) throw ContractError("empty input sequence");
    Vector scores = Vector::Zero(g->item_count);
    for (const auto& [dst, count] : g->row(input.back()))
      scores(dst - 1) = static_cast<double>(count);
    return scores;
  };
}

std::string report_csv(const EvalReport& report) {
  std::string out = "metric,cutoff,group,value,count\n";
  auto emit = [&](const EvalGroup& g) {
    for (const char* metric : {"hr", "ndcg"})
      for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
        const MetricPoint& m = g.means[c];
        out += metric;
        out += ',' + std::to_string(report.cutoffs[c]) + ',' + g.label + ',' +
               format_value(metric[0] == 'h' ? m.hr : m.ndcg) + ',' +
               std::to_string(g.count) + '\n';
      }
  };
  emit(report.all);
  for (const EvalGroup& g : report.groups) emit(g);
  return out;
}

void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path);
  out << report_csv(report);
}

}  // namespace mqsa

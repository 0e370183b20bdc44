#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mqsa/common.hpp"
#include "mqsa/dataio.hpp"
#include "mqsa/model.hpp"
#include "mqsa/transition.hpp"

namespace mqsa {

struct MetricPoint {
  double hr = 0.0;
  double ndcg = 0.0;
};

struct EvalGroup {
  std::string label;
  std::int64_t count = 0;
  std::vector<MetricPoint> means;  // parallel to the report's cutoffs
};

struct EvalReport {
  std::vector<Index> cutoffs;
  EvalGroup all;                  // label "all", every evaluated user
  std::vector<EvalGroup> groups;  // transition-frequency buckets, else empty
};

enum class EvalPhase { kValid, kTest };

// 1-based full-ranking position of `target` among non-excluded items:
// 1 + strictly-greater scores + equal scores with a smaller id. scores(j)
// belongs to item j+1. The target itself must not be excluded.
Index rank_of_target(const Vector& scores, int target,
                     const std::vector<int>& exclusions);

// hr = [rank <= cutoff]; ndcg = 1/log2(rank+1) inside the cutoff, else 0.
MetricPoint metrics_at(Index rank, Index cutoff);

// Scores for items 1..item_count given one user's input sequence
// (chronological, no padding).
using Scorer = std::function<Vector(const std::vector<int>& input)>;

// Full-ranking evaluation over the split's eligible users. Valid phase:
// input = train items, target = the held-out validation item, exclusions =
// train positives. Test phase: the validation item joins the input and the
// exclusions, target = the held-out test item. The target is never
// excluded, even when it repeats in the history. With `grouping` (test
// phase only), users are bucketed by the training-data frequency of their
// valid->test transition into {0, 1, 2, 3, >=4}.
EvalReport evaluate_scorer(const Scorer& scorer, const SplitDataset& split,
                           EvalPhase phase, const std::vector<Index>& cutoffs,
                           const TransitionGraph* grouping = nullptr);

// Same protocol for a trained model: inputs are truncated to the most
// recent cfg.n items, forwarded in inference mode, and the final position
// is scored against the embedding table. Users are processed in id order;
// batching is an internal detail.
EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg,
                    const SplitDataset& split, EvalPhase phase,
                    const std::vector<Index>& cutoffs,
                    const TransitionGraph* grouping = nullptr);

// Global training popularity, identical for every user.
Scorer pop_scorer(const SplitDataset& split);

// Outgoing transition counts of the last input item; items it never
// preceded score zero.
Scorer transition_scorer(const TransitionGraph& graph);

// CSV rows `metric,cutoff,group,value,count` with a header; group "all"
// first, then the buckets when present.
std::string report_csv(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);

}  // namespace mqsa

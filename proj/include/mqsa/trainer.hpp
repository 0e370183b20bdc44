#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqsa/dataio.hpp"
#include "mqsa/evaluator.hpp"
#include "mqsa/model.hpp"
#include "mqsa/transition.hpp"

namespace mqsa {

struct TrainConfig {
  double learning_rate = 1e-3;
  Index batch_size = 128;
  Index max_epochs = 200;
  Index patience = 20;
  std::uint64_t seed = 42;

  // learning_rate may be zero (a frozen run is well-defined); everything
  // else must be positive.
  void validate() const;
};

struct EpochRecord {
  Index epoch = 0;      // 1-based
  double rec_loss = 0;  // epoch mean per supervised position
  double kd_loss = 0;   // epoch mean per distilled item, 0 when off
  double l2 = 0;        // squared parameter norm after the epoch, 0 when off
  MetricPoint at5, at10, at20;  // validation metrics
  double seconds = 0;           // wall clock, excluded from determinism
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  Index best_epoch = 0;  // 1-based; 0 if nothing was recorded
  double best_ndcg10 = 0.0;
};

struct TrainResult {
  ModelParams params;  // snapshot from the best validation epoch
  TrainHistory history;
};

// Mini-batch Adam over the split's training sequences. Per epoch: shuffled
// batches, masked cross-entropy (+ distillation over each batch's item
// subset when lambda_kd > 0, + the norm penalty when lambda_l2 > 0),
// backward, Adam update; then full-ranking validation. Keeps the
// parameters of the best validation NDCG@10 and stops after `patience`
// epochs without improvement. A non-finite loss raises NumericError.
// `initial` overrides the seeded initialization when given (its shape must
// match the config); the graph must cover the same item vocabulary.
TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const SplitDataset& split, const TransitionGraph& graph,
                  const ModelParams* initial = nullptr);

// CSV with header
// epoch,rec_loss,kd_loss,l2,hr5,ndcg5,hr10,ndcg10,hr20,ndcg20,seconds.
std::string history_csv(const TrainHistory& history);
void write_history(const TrainHistory& history, const std::string& path);

}  // namespace mqsa

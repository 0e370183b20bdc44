#include "mqsa/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mqsa/adam.hpp"
#include "mqsa/ops.hpp"

namespace mqsa {
namespace {

Index count_masked(const MaskMatrix& mask) {
  Index n = 0;
  for (Index i = 0; i < mask.rows(); ++i)
    for (Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j) != 0) ++n;
  return n;
}

Index count_distillable(const TransitionGraph& graph,
                        const std::vector<int>& subset) {
  Index n = 0;
  for (int id : subset)
    if (!graph.row(id).empty()) ++n;
  return n;
}

double param_norm(ModelParams& params) {
  double total = 0.0;
  for (const Matrix* m : collect_params(params)) total += m->squaredNorm();
  return total;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw ParameterError("learning_rate must be >= 0");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
  if (patience < 1) throw ParameterError("patience must be >= 1");
}

TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const SplitDataset& split, const TransitionGraph& graph,
                  const ModelParams* initial) {
  mcfg.validate();
  tcfg.validate();
  if (graph.item_count != split.item_count)
    throw DimensionError("graph covers " + std::to_string(graph.item_count) +
                         " items, split has " +
                         std::to_string(split.item_count));
  bool trainable = false;
  for (const std::vector<int>& seq : split.train)
    if (seq.size() >= 2) trainable = true;
  if (!trainable)
    throw DatasetError("no training sequence has two or more items");

  SplitMix64 init_rng = stream_rng(tcfg.seed, rng_streams::kInit);
  ModelParams params = initial != nullptr
                           ? *initial
                           : init_params(mcfg, split.item_count, init_rng);
  if (params.item_count != split.item_count)
    throw DimensionError("initial params cover " +
                         std::to_string(params.item_count) + " items");

  SplitMix64 shuffle_rng = stream_rng(tcfg.seed, rng_streams::kShuffle);
  SplitMix64 dropout_rng = stream_rng(tcfg.seed, rng_streams::kDropout);
  AdamState adam;
  adam.learning_rate = tcfg.learning_rate;

  TrainResult result;
  result.params = params;
  Index stale_epochs = 0;

  for (Index epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double rec_sum = 0.0, kd_sum = 0.0;
    Index rec_count = 0, kd_count = 0;

    BatchIter batches(split, mcfg.n, tcfg.batch_size, shuffle_rng);
    Batch batch;
    while (batches.next(batch)) {
      Tape tape;
      ParamLeaves leaves = bind_params(tape, params);
      ForwardOutput fwd =
          mqsa_forward(leaves, mcfg, batch.items, dropout_rng, true);
      DiffTensor rec_raw = sequence_cross_entropy(
          fwd.seq_reps, leaves.item_embeddings, batch.targets, batch.mask);
      const Index masked = count_masked(batch.mask);
      DiffTensor rec = scale(rec_raw, 1.0 / static_cast<double>(masked));

      DiffTensor kd;
      Index distillable = 0;
      if (mcfg.lambda_kd > 0.0) {
        std::vector<int> subset = batch_item_subset(batch.items);
        distillable = count_distillable(graph, subset);
        DiffTensor kd_raw =
            kd_loss(leaves.item_embeddings, graph, mcfg.tau, subset,
                    mcfg.dropout_rate, dropout_rng, true);
        kd = distillable > 0
                 ? scale(kd_raw, 1.0 / static_cast<double>(distillable))
                 : kd_raw;
        kd_sum += kd_raw.scalar_value();
        kd_count += distillable;
      }

      DiffTensor loss =
          total_loss(rec, kd, leaves, mcfg.lambda_kd, mcfg.lambda_l2);
      if (!std::isfinite(loss.scalar_value()))
        throw NumericError("loss diverged at epoch " + std::to_string(epoch));
      tape.backward(loss);

      std::vector<Matrix*> targets = collect_params(params);
      std::vector<const Matrix*> grads;
      grads.reserve(targets.size());
      for (const DiffTensor& leaf : collect_leaves(leaves))
        grads.push_back(&leaf.grad());
      adam_step(targets, grads, adam);

      rec_sum += rec_raw.scalar_value();
      rec_count += masked;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.rec_loss = rec_sum / static_cast<double>(rec_count);
    record.kd_loss =
        kd_count > 0 ? kd_sum / static_cast<double>(kd_count) : 0.0;
    record.l2 = mcfg.lambda_l2 > 0.0 ? param_norm(params) : 0.0;

    EvalReport report =
        evaluate(params, mcfg, split, EvalPhase::kValid, {5, 10, 20});
    record.at5 = report.all.means[0];
    record.at10 = report.all.means[1];
    record.at20 = report.all.means[2];
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      started)
            .count();
    result.history.epochs.push_back(record);

    if (result.history.best_epoch == 0 ||
        record.at10.ndcg > result.history.best_ndcg10) {
      result.history.best_epoch = epoch;
      result.history.best_ndcg10 = record.at10.ndcg;
      result.params = params;
      stale_epochs = 0;
    } else if (++stale_epochs >= tcfg.patience) {
      break;
    }
  }
  return result;
}

std::string history_csv(const TrainHistory& history) {
  std::string out =
      "epoch,rec_loss,kd_loss,l2,hr5,ndcg5,hr10,ndcg10,hr20,ndcg20,seconds\n";
  for (const EpochRecord& r : history.epochs) {
    out += std::to_string(r.epoch);
    for (double v : {r.rec_loss, r.kd_loss, r.l2, r.at5.hr, r.at5.ndcg,
                     r.at10.hr, r.at10.ndcg, r.at20.hr, r.at20.ndcg,
                     r.seconds})
      out += ',' + format_value(v);
    out += '\n';
  }
  return out;
}

void write_history(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path);
  out << history_csv(history);
}

}  // namespace mqsa

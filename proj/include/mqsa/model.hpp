#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mqsa/ops.hpp"
#include "mqsa/rng.hpp"
#include "mqsa/tape.hpp"
#include "mqsa/transition.hpp"

namespace mqsa {

struct ModelConfig {
  Index d = 64;           // embedding size
  Index n = 50;           // max sequence length
  Index num_blocks = 2;   // transformer blocks per branch
  Index L = 3;            // long-query pooling window
  double alpha = 0.5;     // short-branch mixing weight
  double dropout_rate = 0.5;
  double tau = 0.1;       // distillation temperature
  double lambda_kd = 0.1;
  double lambda_l2 = 0.0;

  void validate() const;
};

// One transformer block: single-head causal attention (q/k/v projections),
// then a two-layer position-wise feed-forward of inner width d, each
// sublayer followed by residual + layer norm.
struct BlockParams {
  Matrix wq, wk, wv;      // d x d
  Matrix ff1_w, ff2_w;    // d x d
  Matrix ff1_b, ff2_b;    // 1 x d
  Matrix ln1_g, ln1_b;    // 1 x d, after attention
  Matrix ln2_g, ln2_b;    // 1 x d, after feed-forward
};

struct BranchParams {
  std::vector<BlockParams> blocks;
};

// The short and long branches own disjoint stacks; the item and positional
// tables are shared between them. Row 0 of item_embeddings is the padding
// row: all-zero, frozen (it never receives gradient).
struct ModelParams {
  Matrix item_embeddings;  // (item_count+1) x d
  Matrix positional;       // n x d
  BranchParams short_branch;
  BranchParams long_branch;
  int item_count = 0;
};

// Tape-bound mirror of ModelParams for one training step.
struct BlockLeaves {
  DiffTensor wq, wk, wv, ff1_w, ff2_w, ff1_b, ff2_b, ln1_g, ln1_b, ln2_g, ln2_b;
};
struct BranchLeaves {
  std::vector<BlockLeaves> blocks;
};
struct ParamLeaves {
  DiffTensor item_embeddings, positional;
  BranchLeaves short_branch;
  BranchLeaves long_branch;
};

enum class QuerySource { kSelf, kPooled };

struct ForwardOutput {
  DiffTensor seq_reps;    // batch x n x d: alpha*short + (1-alpha)*long
  DiffTensor short_reps;  // invalid when alpha == 0 (branch skipped)
  DiffTensor long_reps;   // invalid when alpha == 1 (branch skipped)
};

// Fixed parameter enumeration shared by initialization, tape binding, Adam
// state, and the checkpoint layout. The visitor receives (name, field) with
// field being Matrix& or DiffTensor& depending on the struct.
template <class Params, class Fn>
void visit_params(Params& p, Fn&& fn) {
  fn("item_embeddings", p.item_embeddings);
  fn("positional", p.positional);
  const char* branch_names[2] = {"short", "long"};
  auto* branches_s = &p.short_branch;
  auto* branches_l = &p.long_branch;
  decltype(branches_s) branches[2] = {branches_s, branches_l};
  for (int s = 0; s < 2; ++s) {
    auto& blocks = branches[s]->blocks;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::string prefix =
          std::string(branch_names[s]) + "." + std::to_string(b) + ".";
      auto& blk = blocks[b];
      fn(prefix + "wq", blk.wq);
      fn(prefix + "wk", blk.wk);
      fn(prefix + "wv", blk.wv);
      fn(prefix + "ff1_w", blk.ff1_w);
      fn(prefix + "ff1_b", blk.ff1_b);
      fn(prefix + "ff2_w", blk.ff2_w);
      fn(prefix + "ff2_b", blk.ff2_b);
      fn(prefix + "ln1_g", blk.ln1_g);
      fn(prefix + "ln1_b", blk.ln1_b);
      fn(prefix + "ln2_g", blk.ln2_g);
      fn(prefix + "ln2_b", blk.ln2_b);
    }
  }
}

// Truncated-normal(std 0.02, cutoff 2 std) weights, zero biases, unit
// layer-norm gains; the padding embedding row stays zero. Equal seeds give
// bitwise-identical parameters.
ModelParams init_params(const ModelConfig& cfg, int item_count,
                        SplitMix64& rng);

ParamLeaves bind_params(Tape& tape, const ModelParams& params);

std::vector<DiffTensor> collect_leaves(const ParamLeaves& leaves);
std::vector<Matrix*> collect_params(ModelParams& params);
std::vector<std::string> param_names(const ModelParams& params);

// Per-position item embedding + positional embedding lookup. Padding
// positions (id 0) read the frozen zero row but still add the positional
// vector; their outputs are erased by masking downstream. Gradient never
// flows into embedding row 0.
DiffTensor embed_sequence(const DiffTensor& item_embeddings,
                          const DiffTensor& positional,
                          const IntMatrix& items);

// Per-position mean of x over the last window_len real (item != 0)
// positions ending at t. A position with no real item in its window keeps
// its own row, which downstream masking makes irrelevant; window_len=1 is
// the exact identity.
DiffTensor long_query_pool(const DiffTensor& x, const IntMatrix& items,
                           Index window_len);

// Scaled dot-product attention per sequence with a causal mask (t attends
// to positions <= t) and a padding-key mask; masked logits are set to -1e9
// before the softmax, so fully masked rows stay finite.
DiffTensor causal_attention(const DiffTensor& q, const DiffTensor& k,
                            const DiffTensor& v, const IntMatrix& items);

DiffTensor branch_forward(const DiffTensor& embedded, const IntMatrix& items,
                          const BranchLeaves& branch, QuerySource source,
                          const ModelConfig& cfg, SplitMix64& rng,
                          bool training);

// Short branch (self queries) and long branch (pooled queries) over one
// shared embedding, blended by alpha. A branch with zero weight is skipped
// entirely —the blend is exact either way and the skipped branch consumes
// no dropout randomness.
ForwardOutput mqsa_forward(const ParamLeaves& leaves, const ModelConfig& cfg,
                           const IntMatrix& items, SplitMix64& rng,
                           bool training);

// Dot products against item embedding rows 1..item_count (shared
// input/output embeddings; the padding row is excluded).
DiffTensor score_items(const DiffTensor& seq_reps,
                       const DiffTensor& item_embeddings);
Matrix score_items_value(const Matrix& seq_reps, const ModelParams& params);

// Cumulative cross-entropy over masked positions of a full score tensor
// (batch x n x item_count): -sum log softmax(scores)[target]. Reference
// route; sequence_cross_entropy below computes the same quantity without
// materializing all logits.
DiffTensor rec_loss(const DiffTensor& scores, const IntMatrix& targets,
                    const MaskMatrix& mask);

// Fused masked cross-entropy: gathers masked rows of seq_reps, streams
// logit chunks against the embedding table, and scatters gradients straight
// into seq_reps and the table. Equal to rec_loss(score_items(...)) to
// within accumulation order.
DiffTensor sequence_cross_entropy(const DiffTensor& seq_reps,
                                  const DiffTensor& item_embeddings,
                                  const IntMatrix& targets,
                                  const MaskMatrix& mask, Index chunk = 256);

// Transition distillation: for each subset item with outgoing transitions,
// cross-entropy from the graph's pseudo-label row to the student
// softmax(dropout(e_i) E^T / tau) over all items. Summed over the subset;
// items with empty rows are skipped. The graph is held by reference and
// must outlive the tape's backward pass.
DiffTensor kd_loss(const DiffTensor& item_embeddings,
                   const TransitionGraph& graph, double tau,
                   const std::vector<int>& item_subset, double dropout_rate,
                   SplitMix64& rng, bool training, Index chunk = 256);

// Distinct non-padding item ids of a batch's input matrix, ascending.
std::vector<int> batch_item_subset(const IntMatrix& items);

// Squared L2 norm of every trainable array (the frozen padding row is zero,
// so it contributes nothing).
DiffTensor l2_penalty(const ParamLeaves& leaves);

// total = rec + lambda_kd * kd + lambda_l2 * |theta|^2. Pass kd as invalid
// when distillation is off (lambda_kd == 0).
DiffTensor total_loss(const DiffTensor& rec, const DiffTensor& kd,
                      const ParamLeaves& leaves, double lambda_kd,
                      double lambda_l2);

// Comparators kept for side-by-side runs.
//
// Weighted embedding-distance regularizer over each item's top
// `neighbor_k` outgoing transitions: sum of count * |e_i - e_j|^2.
DiffTensor grareg_loss(const DiffTensor& item_embeddings,
                       const TransitionGraph& graph, int neighbor_k);

// Symmetric-normalized graph convolution over the transition graph:
// E <- D^(-1/2) (A_sym + I) D^(-1/2) E, applied `layers` times to rows
// 1..item_count (the counts are symmetrized first; row 0 passes through).
Matrix ges_smooth(const Matrix& item_embeddings, const TransitionGraph& graph,
                  int layers);

// Binary little-endian checkpoint: header (magic, version, config,
// item_count), then each parameter in visit_params order as
// name / rows / cols / row-major float64 payload. Layout details in the
// README.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params);
std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path);

}  // namespace mqsa

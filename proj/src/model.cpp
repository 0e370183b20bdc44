#include "mqsa/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mqsa {

void ModelConfig::validate() const {
  if (d < 1 || n < 1 || num_blocks < 1 || L < 1)
    throw ParameterError("d, n, num_blocks, L must all be >= 1");
  if (alpha < 0.0 || alpha > 1.0)
    throw ParameterError("alpha must lie in [0,1]");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ParameterError("dropout_rate must lie in [0,1)");
  if (tau <= 0.0) throw ParameterError("tau must be positive");
  if (lambda_kd < 0.0 || lambda_l2 < 0.0)
    throw ParameterError("lambda_kd and lambda_l2 must be >= 0");
}

namespace {

BranchParams make_branch(const ModelConfig& cfg) {
  BranchParams branch;
  branch.blocks.resize(static_cast<std::size_t>(cfg.num_blocks));
  for (auto& blk : branch.blocks) {
    blk.wq = Matrix::Zero(cfg.d, cfg.d);
    blk.wk = Matrix::Zero(cfg.d, cfg.d);
    blk.wv = Matrix::Zero(cfg.d, cfg.d);
    blk.ff1_w = Matrix::Zero(cfg.d, cfg.d);
    blk.ff2_w = Matrix::Zero(cfg.d, cfg.d);
    blk.ff1_b = Matrix::Zero(1, cfg.d);
    blk.ff2_b = Matrix::Zero(1, cfg.d);
    blk.ln1_g = Matrix::Ones(1, cfg.d);
    blk.ln1_b = Matrix::Zero(1, cfg.d);
    blk.ln2_g = Matrix::Ones(1, cfg.d);
    blk.ln2_b = Matrix::Zero(1, cfg.d);
  }
  return branch;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, int item_count,
                        SplitMix64& rng) {
  cfg.validate();
  if (item_count < 1) throw ParameterError("item_count must be >= 1");
  ModelParams p;
  p.item_count = item_count;
  p.item_embeddings = Matrix::Zero(item_count + 1, cfg.d);
  p.positional = Matrix::Zero(cfg.n, cfg.d);
  p.short_branch = make_branch(cfg);
  p.long_branch = make_branch(cfg);
  visit_params(p, [&](const std::string& name, Matrix& m) {
    if (name.ends_with("_b") || name.ends_with("_g")) return;  // zeros / ones
    Index first_row = (name == "item_embeddings") ? 1 : 0;  // padding row stays 0
    for (Index i = first_row; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        m(i, j) = rng.next_truncated_normal(0.02);
  });
  return p;
}

ParamLeaves bind_params(Tape& tape, const ModelParams& params) {
  std::vector<DiffTensor> made;
  visit_params(params, [&](const std::string&, const Matrix& m) {
    made.push_back(tape.leaf(m));
  });
  ParamLeaves leaves;
  leaves.short_branch.blocks.resize(params.short_branch.blocks.size());
  leaves.long_branch.blocks.resize(params.long_branch.blocks.size());
  std::size_t i = 0;
  visit_params(leaves, [&](const std::string&, DiffTensor& d) { d = made[i++]; });
  return leaves;
}

std::vector<DiffTensor> collect_leaves(const ParamLeaves& leaves) {
  std::vector<DiffTensor> out;
  visit_params(leaves, [&](const std::string&, const DiffTensor& d) {
    out.push_back(d);
  });
  return out;
}

std::vector<Matrix*> collect_params(ModelParams& params) {
  std::vector<Matrix*> out;
  visit_params(params, [&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<std::string> param_names(const ModelParams& params) {
  std::vector<std::string> out;
  visit_params(params, [&](const std::string& name, const Matrix&) {
    out.push_back(name);
  });
  return out;
}

DiffTensor embed_sequence(const DiffTensor& item_embeddings,
                          const DiffTensor& positional,
                          const IntMatrix& items) {
  Tape* t = item_embeddings.tape();
  if (t == nullptr || positional.tape() != t)
    throw ContractError("embed_sequence needs leaves on one tape");
  const Index batch = items.rows(), n = items.cols(), d = item_embeddings.cols();
  if (positional.cols() != d || positional.rows() != n)
    throw DimensionError("positional table is " + shape_str(positional.value()) +
                         ", expected [" + std::to_string(n) + "," +
                         std::to_string(d) + "]");
  const Matrix& emb = item_embeddings.value();
  Matrix out(batch * n, d);
  for (Index b = 0; b < batch; ++b)
    for (Index pos = 0; pos < n; ++pos) {
      int id = items(b, pos);
      if (id < 0 || id >= emb.rows())
        throw ValidationError("item id " + std::to_string(id) +
                              " outside embedding table of " +
                              std::to_string(emb.rows() - 1) + " items");
      out.row(b * n + pos) = emb.row(id) + positional.value().row(pos);
    }
  DiffTensor node = t->node(std::move(out), {batch, n, d});
  int ide = item_embeddings.id(), idp = positional.id(), ido = node.id();
  t->on_backward(node, [t, ide, idp, ido, items, batch, n] {
    const Matrix& g = t->grad(ido);
    Matrix& ge = t->grad(ide);
    Matrix& gp = t->grad(idp);
    for (Index b = 0; b < batch; ++b)
      for (Index pos = 0; pos < n; ++pos) {
        const auto row = g.row(b * n + pos);
        int id = items(b, pos);
        if (id > 0) ge.row(id) += row;  // padding row 0 stays frozen
        gp.row(pos) += row;
      }
  });
  return node;
}

DiffTensor long_query_pool(const DiffTensor& x, const IntMatrix& items,
                           Index window_len) {
  if (window_len < 1) throw ParameterError("pooling window must be >= 1");
  Tape* t = x.tape();
  if (t == nullptr) throw ContractError("long_query_pool on empty DiffTensor");
  const Index batch = items.rows(), n = items.cols(), d = x.cols();
  if (x.rows() != batch * n)
    throw DimensionError("x is " + shape_str(x.value()) + ", expected " +
                         std::to_string(batch * n) + " rows");
  const Matrix& xv = x.value();
  Matrix out(batch * n, d);
  for (Index b = 0; b < batch; ++b)
    for (Index pos = 0; pos < n; ++pos) {
      Index lo = std::max<Index>(0, pos - window_len + 1);
      Index count = 0;
      out.row(b * n + pos).setZero();
      for (Index p = lo; p <= pos; ++p)
        if (items(b, p) != 0) {
          out.row(b * n + pos) += xv.row(b * n + p);
          ++count;
        }
      if (count > 0)
        out.row(b * n + pos) /= static_cast<double>(count);
      else
        out.row(b * n + pos) = xv.row(b * n + pos);  // inert: row is fully masked
    }
  DiffTensor node = t->node(std::move(out), {batch, n, d});
  int idx = x.id(), ido = node.id();
  t->on_backward(node, [t, idx, ido, items, batch, n, window_len] {
    const Matrix& g = t->grad(ido);
    Matrix& gx = t->grad(idx);
    for (Index b = 0; b < batch; ++b)
      for (Index pos = 0; pos < n; ++pos) {
        Index lo = std::max<Index>(0, pos - window_len + 1);
        Index count = 0;
        for (Index p = lo; p <= pos; ++p)
          if (items(b, p) != 0) ++count;
        if (count > 0) {
          const double w = 1.0 / static_cast<double>(count);
          for (Index p = lo; p <= pos; ++p)
            if (items(b, p) != 0)
              gx.row(b * n + p) += w * g.row(b * n + pos);
        } else {
          gx.row(b * n + pos) += g.row(b * n + pos);
        }
      }
  });
  return node;
}

DiffTensor causal_attention(const DiffTensor& q, const DiffTensor& k,
                            const DiffTensor& v, const IntMatrix& items) {
  Tape* t = q.tape();
  if (t == nullptr || k.tape() != t || v.tape() != t)
    throw ContractError("causal_attention needs one tape");
  const Index batch = items.rows(), n = items.cols(), d = q.cols();
  if (q.rows() != batch * n || k.rows() != batch * n || v.rows() != batch * n ||
      k.cols() != d || v.cols() != d)
    throw DimensionError("causal_attention: q " + shape_str(q.value()) +
                         ", k " + shape_str(k.value()) + ", v " +
                         shape_str(v.value()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix out(batch * n, d);
  std::vector<Matrix> weights(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) {
    auto qb = q.value().middleRows(b * n, n);
    auto kb = k.value().middleRows(b * n, n);
    Matrix scores = qb * kb.transpose() * scale;
    for (Index row = 0; row < n; ++row)
      for (Index col = 0; col < n; ++col)
        if (col > row || items(b, col) == 0) scores(row, col) = -1e9;
    Matrix w = softmax_rows_value(std::move(scores), 1.0);
    out.middleRows(b * n, n).noalias() = w * v.value().middleRows(b * n, n);
    weights[static_cast<std::size_t>(b)] = std::move(w);
  }
  DiffTensor node = t->node(std::move(out), {batch, n, d});
  int idq = q.id(), idk = k.id(), idv = v.id(), ido = node.id();
  t->on_backward(node, [t, idq, idk, idv, ido, items, batch, n, scale,
                        weights = std::move(weights)] {
    const Matrix& g = t->grad(ido);
    for (Index b = 0; b < batch; ++b) {
      const Matrix& w = weights[static_cast<std::size_t>(b)];
      auto gb = g.middleRows(b * n, n);
      auto qb = t->value(idq).middleRows(b * n, n);
      auto kb = t->value(idk).middleRows(b * n, n);
      auto vb = t->value(idv).middleRows(b * n, n);
      t->grad(idv).middleRows(b * n, n).noalias() += w.transpose() * gb;
      Matrix dw = gb * vb.transpose();
      Vector rowdot = (dw.array() * w.array()).rowwise().sum().matrix();
      Matrix ds = (w.array() * (dw.colwise() - rowdot).array()).matrix();
      // Masked logits are constants, not functions of q/k: no flow through.
      for (Index row = 0; row < n; ++row)
        for (Index col = 0; col < n; ++col)
          if (col > row || items(b, col) == 0) ds(row, col) = 0.0;
      t->grad(idq).middleRows(b * n, n).noalias() += ds * kb * scale;
      t->grad(idk).middleRows(b * n, n).noalias() += ds.transpose() * qb * scale;
    }
  });
  return node;
}

DiffTensor branch_forward(const DiffTensor& embedded, const IntMatrix& items,
                          const BranchLeaves& branch, QuerySource source,
                          const ModelConfig& cfg, SplitMix64& rng,
                          bool training) {
  DiffTensor x = embedded;
  for (const BlockLeaves& blk : branch.blocks) {
    DiffTensor query_base =
        source == QuerySource::kSelf ? x : long_query_pool(x, items, cfg.L);
    DiffTensor queries = matmul(query_base, blk.wq);
    DiffTensor keys = matmul(x, blk.wk);
    DiffTensor values = matmul(x, blk.wv);
    DiffTensor attended = causal_attention(queries, keys, values, items);
    attended = dropout(attended, cfg.dropout_rate, rng, training);
    DiffTensor after_attn =
        layer_norm(add(x, attended), blk.ln1_g, blk.ln1_b);
    DiffTensor hidden =
        relu(add_row_broadcast(matmul(after_attn, blk.ff1_w), blk.ff1_b));
    DiffTensor ff =
        add_row_broadcast(matmul(hidden, blk.ff2_w), blk.ff2_b);
    ff = dropout(ff, cfg.dropout_rate, rng, training);
    x = layer_norm(add(after_attn, ff), blk.ln2_g, blk.ln2_b);
  }
  return x;
}

ForwardOutput mqsa_forward(const ParamLeaves& leaves, const ModelConfig& cfg,
                           const IntMatrix& items, SplitMix64& rng,
                           bool training) {
  cfg.validate();
  DiffTensor embedded =
      embed_sequence(leaves.item_embeddings, leaves.positional, items);
  ForwardOutput out;
  if (cfg.alpha == 1.0) {
    out.short_reps = branch_forward(embedded, items, leaves.short_branch,
                                    QuerySource::kSelf, cfg, rng, training);
    out.seq_reps = out.short_reps;
  } else if (cfg.alpha == 0.0) {
    out.long_reps = branch_forward(embedded, items, leaves.long_branch,
                                   QuerySource::kPooled, cfg, rng, training);
    out.seq_reps = out.long_reps;
  } else {
    out.short_reps = branch_forward(embedded, items, leaves.short_branch,
                                    QuerySource::kSelf, cfg, rng, training);
    out.long_reps = branch_forward(embedded, items, leaves.long_branch,
                                   QuerySource::kPooled, cfg, rng, training);
    out.seq_reps =
        weighted_sum(out.short_reps, cfg.alpha, out.long_reps, 1.0 - cfg.alpha);
  }
  return out;
}

DiffTensor score_items(const DiffTensor& seq_reps,
                       const DiffTensor& item_embeddings) {
  DiffTensor candidates =
      slice_rows(item_embeddings, 1, item_embeddings.rows() - 1);
  return matmul_nt(seq_reps, candidates);
}

Matrix score_items_value(const Matrix& seq_reps, const ModelParams& params) {
  return seq_reps *
         params.item_embeddings.middleRows(1, params.item_count).transpose();
}

std::vector<int> batch_item_subset(const IntMatrix& items) {
  std::set<int> seen;
  for (Index i = 0; i < items.rows(); ++i)
    for (Index j = 0; j < items.cols(); ++j)
      if (items(i, j) != 0) seen.insert(items(i, j));
  return {seen.begin(), seen.end()};
}

}  // namespace mqsa

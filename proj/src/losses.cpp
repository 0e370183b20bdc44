#include <algorithm>
#include <cmath>
#include <map>

#include "mqsa/model.hpp"

namespace mqsa {

namespace {

// Stable log-sum-exp of one row.
double row_lse(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double mx = row.maxCoeff();
  return mx + std::log((row.array() - mx).exp().sum());
}

Matrix softmax_rows_inplace(Matrix z) {
  for (Index i = 0; i < z.rows(); ++i) {
    double mx = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - mx).exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

struct MaskedRow {
  Index row;
  int target;
};

// Gathers (and optionally dropout-scales) the distillation source rows.
Matrix gather_sources(const Matrix& emb, const std::vector<int>& usable,
                      std::size_t begin, std::size_t end, bool dropping,
                      const MaskMatrix& masks, double keep) {
  Matrix src(static_cast<Index>(end - begin), emb.cols());
  for (std::size_t i = begin; i < end; ++i) {
    Index r = static_cast<Index>(i - begin);
    src.row(r) = emb.row(usable[i]);
    if (dropping)
      src.row(r) = (src.row(r).array() *
                    masks.row(static_cast<Index>(i)).cast<double>().array() /
                    keep)
                       .matrix();
  }
  return src;
}

std::vector<MaskedRow> masked_rows(const IntMatrix& targets,
                                   const MaskMatrix& mask, Index item_count) {
  if (targets.rows() != mask.rows() || targets.cols() != mask.cols())
    throw DimensionError("targets " + std::to_string(targets.rows()) + "x" +
                         std::to_string(targets.cols()) + " vs mask " +
                         std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()));
  std::vector<MaskedRow> rows;
  for (Index b = 0; b < targets.rows(); ++b)
    for (Index p = 0; p < targets.cols(); ++p)
      if (mask(b, p) != 0) {
        int y = targets(b, p);
        if (y < 1 || y > item_count)
          throw ContractError("masked position (" + std::to_string(b) + "," +
                              std::to_string(p) + ") has target " +
                              std::to_string(y));
        rows.push_back({b * targets.cols() + p, y});
      }
  return rows;
}

}  // namespace

DiffTensor rec_loss(const DiffTensor& scores, const IntMatrix& targets,
                    const MaskMatrix& mask) {
  Tape* t = scores.tape();
  if (t == nullptr) throw ContractError("rec_loss on empty DiffTensor");
  const Index item_count = scores.cols();
  if (scores.rows() != targets.rows() * targets.cols())
    throw DimensionError("scores have " + std::to_string(scores.rows()) +
                         " rows for " +
                         std::to_string(targets.rows() * targets.cols()) +
                         " positions");
  auto rows = masked_rows(targets, mask, item_count);
  double loss = 0.0;
  for (const MaskedRow& r : rows)
    loss += row_lse(scores.value().row(r.row)) -
            scores.value()(r.row, r.target - 1);
  DiffTensor node = t->scalar(loss);
  int ids = scores.id(), ido = node.id();
  t->on_backward(node, [t, ids, ido, rows = std::move(rows)] {
    const double g = t->grad(ido)(0, 0);
    Matrix& gs = t->grad(ids);
    const Matrix& sv = t->value(ids);
    for (const MaskedRow& r : rows) {
      Eigen::RowVectorXd p = sv.row(r.row);
      double mx = p.maxCoeff();
      p = (p.array() - mx).exp().matrix();
      p /= p.sum();
      p(r.target - 1) -= 1.0;
      gs.row(r.row) += g * p;
    }
  });
  return node;
}

DiffTensor sequence_cross_entropy(const DiffTensor& seq_reps,
                                  const DiffTensor& item_embeddings,
                                  const IntMatrix& targets,
                                  const MaskMatrix& mask, Index chunk) {
  Tape* t = seq_reps.tape();
  if (t == nullptr || item_embeddings.tape() != t)
    throw ContractError("sequence_cross_entropy needs one tape");
  if (chunk < 1) throw ParameterError("chunk must be >= 1");
  const Index item_count = item_embeddings.rows() - 1;
  const Index d = item_embeddings.cols();
  if (seq_reps.cols() != d)
    throw DimensionError("seq_reps width " + std::to_string(seq_reps.cols()) +
                         " vs embedding width " + std::to_string(d));
  if (seq_reps.rows() != targets.rows() * targets.cols())
    throw DimensionError("seq_reps have " + std::to_string(seq_reps.rows()) +
                         " rows for " +
                         std::to_string(targets.rows() * targets.cols()) +
                         " positions");
  auto rows = masked_rows(targets, mask, item_count);
  double loss = 0.0;
  {
    const Matrix& reps = seq_reps.value();
    const Matrix& emb = item_embeddings.value();
    for (std::size_t begin = 0; begin < rows.size();
         begin += static_cast<std::size_t>(chunk)) {
      std::size_t end =
          std::min(rows.size(), begin + static_cast<std::size_t>(chunk));
      Matrix gathered(static_cast<Index>(end - begin), d);
      for (std::size_t i = begin; i < end; ++i)
        gathered.row(static_cast<Index>(i - begin)) = reps.row(rows[i].row);
      Matrix logits = gathered * emb.middleRows(1, item_count).transpose();
      for (std::size_t i = begin; i < end; ++i) {
        Index r = static_cast<Index>(i - begin);
        loss += row_lse(logits.row(r)) - logits(r, rows[i].target - 1);
      }
    }
  }
  DiffTensor node = t->scalar(loss);
  int idr = seq_reps.id(), ide = item_embeddings.id(), ido = node.id();
  t->on_backward(node, [t, idr, ide, ido, chunk, rows = std::move(rows)] {
    const double g = t->grad(ido)(0, 0);
    const Matrix& reps = t->value(idr);
    const Matrix& emb = t->value(ide);
    const Index item_count = emb.rows() - 1;
    const Index d = emb.cols();
    Matrix& grad_reps = t->grad(idr);
    Matrix& grad_emb = t->grad(ide);
    for (std::size_t begin = 0; begin < rows.size();
         begin += static_cast<std::size_t>(chunk)) {
      std::size_t end =
          std::min(rows.size(), begin + static_cast<std::size_t>(chunk));
      Index span = static_cast<Index>(end - begin);
      Matrix gathered(span, d);
      for (std::size_t i = begin; i < end; ++i)
        gathered.row(static_cast<Index>(i - begin)) = reps.row(rows[i].row);
      Matrix probs = softmax_rows_inplace(
          gathered * emb.middleRows(1, item_count).transpose());
      for (std::size_t i = begin; i < end; ++i)
        probs(static_cast<Index>(i - begin), rows[i].target - 1) -= 1.0;
      probs *= g;
      Matrix dgathered = probs * emb.middleRows(1, item_count);
      for (std::size_t i = begin; i < end; ++i)
        grad_reps.row(rows[i].row) +=
            dgathered.row(static_cast<Index>(i - begin));
      grad_emb.middleRows(1, item_count).noalias() +=
          probs.transpose() * gathered;
    }
  });
  return node;
}

DiffTensor kd_loss(const DiffTensor& item_embeddings,
                   const TransitionGraph& graph, double tau,
                   const std::vector<int>& item_subset, double dropout_rate,
                   SplitMix64& rng, bool training, Index chunk) {
  Tape* t = item_embeddings.tape();
  if (t == nullptr) throw ContractError("kd_loss on empty DiffTensor");
  if (tau <= 0.0) throw ParameterError("tau must be positive");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ParameterError("dropout rate must be in [0,1)");
  if (chunk < 1) throw ParameterError("chunk must be >= 1");
  const Index item_count = item_embeddings.rows() - 1;
  const Index d = item_embeddings.cols();
  if (graph.item_count != item_count)
    throw DimensionError("graph over " + std::to_string(graph.item_count) +
                         " items, table holds " + std::to_string(item_count));

  std::vector<int> usable;
  for (int i : item_subset) {
    if (i < 1 || i > graph.item_count)
      throw ValidationError("subset item " + std::to_string(i) +
                            " outside vocabulary");
    if (!graph.row(i).empty()) usable.push_back(i);
  }
  if (usable.empty()) return t->scalar(0.0);  // nothing to distill

  const bool dropping = training && dropout_rate > 0.0;
  const double keep = 1.0 - dropout_rate;
  MaskMatrix masks;
  if (dropping) {
    masks = MaskMatrix(static_cast<Index>(usable.size()), d);
    for (Index i = 0; i < masks.rows(); ++i)
      for (Index j = 0; j < d; ++j)
        masks(i, j) = rng.next_double() >= dropout_rate ? 1 : 0;
  }

  double loss = 0.0;
  {
    const Matrix& emb = item_embeddings.value();
    for (std::size_t begin = 0; begin < usable.size();
         begin += static_cast<std::size_t>(chunk)) {
      std::size_t end =
          std::min(usable.size(), begin + static_cast<std::size_t>(chunk));
      Matrix src = gather_sources(emb, usable, begin, end, dropping, masks, keep);
      Matrix logits = src * emb.middleRows(1, item_count).transpose() / tau;
      for (std::size_t i = begin; i < end; ++i) {
        Index r = static_cast<Index>(i - begin);
        Vector teacher = *pseudo_label_row(graph, usable[i], tau);
        loss += row_lse(logits.row(r)) - logits.row(r).dot(teacher);
      }
    }
  }
  DiffTensor node = t->scalar(loss);
  int ide = item_embeddings.id(), ido = node.id();
  t->on_backward(node, [t, ide, ido, &graph, tau, chunk, dropping, keep,
                        masks = std::move(masks), usable = std::move(usable)] {
    const double g = t->grad(ido)(0, 0);
    const Matrix& emb = t->value(ide);
    const Index item_count = emb.rows() - 1;
    Matrix& grad_emb = t->grad(ide);
    for (std::size_t begin = 0; begin < usable.size();
         begin += static_cast<std::size_t>(chunk)) {
      std::size_t end =
          std::min(usable.size(), begin + static_cast<std::size_t>(chunk));
      Matrix src = gather_sources(emb, usable, begin, end, dropping, masks, keep);
      Matrix probs = softmax_rows_inplace(
          src * emb.middleRows(1, item_count).transpose() / tau);
      for (std::size_t i = begin; i < end; ++i) {
        Index r = static_cast<Index>(i - begin);
        Vector teacher = *pseudo_label_row(graph, usable[i], tau);
        probs.row(r) -= teacher.transpose();
      }
      probs *= g;
      grad_emb.middleRows(1, item_count).noalias() +=
          probs.transpose() * src / tau;
      Matrix dsrc = probs * emb.middleRows(1, item_count) / tau;
      for (std::size_t i = begin; i < end; ++i) {
        Index r = static_cast<Index>(i - begin);
        if (dropping)
          dsrc.row(r) = (dsrc.row(r).array() *
                         masks.row(static_cast<Index>(i)).cast<double>().array() /
                         keep)
                            .matrix();
        grad_emb.row(usable[i]) += dsrc.row(r);
      }
    }
  });
  return node;
}

DiffTensor l2_penalty(const ParamLeaves& leaves) {
  std::vector<DiffTensor> all = collect_leaves(leaves);
  DiffTensor total = sum_squares(all.front());
  for (std::size_t i = 1; i < all.size(); ++i)
    total = add(total, sum_squares(all[i]));
  return total;
}

DiffTensor total_loss(const DiffTensor& rec, const DiffTensor& kd,
                      const ParamLeaves& leaves, double lambda_kd,
                      double lambda_l2) {
  if (lambda_kd < 0.0 || lambda_l2 < 0.0)
    throw ParameterError("loss weights must be >= 0");
  DiffTensor out = rec;
  if (lambda_kd > 0.0) {
    if (!kd.valid())
      throw ContractError("lambda_kd > 0 but no distillation term supplied");
    out = add_scaled(out, kd, lambda_kd);
  }
  if (lambda_l2 > 0.0) out = add_scaled(out, l2_penalty(leaves), lambda_l2);
  return out;
}

DiffTensor grareg_loss(const DiffTensor& item_embeddings,
                       const TransitionGraph& graph, int neighbor_k) {
  Tape* t = item_embeddings.tape();
  if (t == nullptr) throw ContractError("grareg_loss on empty DiffTensor");
  if (neighbor_k < 1) throw ParameterError("neighbor_k must be >= 1");
  if (graph.item_count != item_embeddings.rows() - 1)
    throw DimensionError("graph over " + std::to_string(graph.item_count) +
                         " items, table holds " +
                         std::to_string(item_embeddings.rows() - 1));
  struct Edge {
    int src, dst, weight;
  };
  std::vector<Edge> edges;
  for (int i = 1; i <= graph.item_count; ++i) {
    auto row = graph.row(i);  // copy; sort by (count desc, id asc)
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t r = 0;
         r < row.size() && r < static_cast<std::size_t>(neighbor_k); ++r)
      edges.push_back({i, row[r].first, row[r].second});
  }
  const Matrix& emb = item_embeddings.value();
  double loss = 0.0;
  for (const Edge& e : edges)
    loss += e.weight * (emb.row(e.src) - emb.row(e.dst)).squaredNorm();
  DiffTensor node = t->scalar(loss);
  int ide = item_embeddings.id(), ido = node.id();
  t->on_backward(node, [t, ide, ido, edges = std::move(edges)] {
    const double g = t->grad(ido)(0, 0);
    const Matrix& emb = t->value(ide);
    Matrix& ge = t->grad(ide);
    for (const Edge& e : edges) {
      Eigen::RowVectorXd diff =
          2.0 * g * e.weight * (emb.row(e.src) - emb.row(e.dst));
      ge.row(e.src) += diff;
      ge.row(e.dst) -= diff;
    }
  });
  return node;
}

Matrix ges_smooth(const Matrix& item_embeddings, const TransitionGraph& graph,
                  int layers) {
  if (layers < 0) throw ParameterError("layers must be >= 0");
  if (graph.item_count != item_embeddings.rows() - 1)
    throw DimensionError("graph over " + std::to_string(graph.item_count) +
                         " items, table holds " +
                         std::to_string(item_embeddings.rows() - 1));
  Matrix out = item_embeddings;
  if (layers == 0) return out;
  // Symmetrized counts with self-loops, then D^(-1/2) A D^(-1/2).
  const int count = graph.item_count;
  std::vector<std::map<int, double>> adj(static_cast<std::size_t>(count) + 1);
  for (int i = 1; i <= count; ++i)
    for (const auto& [j, c] : graph.row(i)) {
      adj[static_cast<std::size_t>(i)][j] += c;
      adj[static_cast<std::size_t>(j)][i] += c;
    }
  for (int i = 1; i <= count; ++i) adj[static_cast<std::size_t>(i)][i] += 1.0;
  Vector degree = Vector::Zero(count + 1);
  for (int i = 1; i <= count; ++i)
    for (const auto& [j, w] : adj[static_cast<std::size_t>(i)]) degree(i) += w;
  for (int pass = 0; pass < layers; ++pass) {
    Matrix next = Matrix::Zero(out.rows(), out.cols());
    next.row(0) = out.row(0);
    for (int i = 1; i <= count; ++i)
      for (const auto& [j, w] : adj[static_cast<std::size_t>(i)])
        next.row(i) += w / std::sqrt(degree(i) * degree(j)) * out.row(j);
    out = std::move(next);
  }
  return out;
}

}  // namespace mqsa

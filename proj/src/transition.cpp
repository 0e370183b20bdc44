#include "mqsa/transition.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "mqsa/ops.hpp"

namespace mqsa {

TransitionGraph build_transition_graph(
    const std::vector<std::vector<int>>& train_sequences, int item_count,
    int k) {
  if (k < 1) throw ParameterError("time span k must be >= 1");
  if (item_count < 1) throw ParameterError("item_count must be >= 1");
  std::vector<std::map<int, int>> acc(static_cast<std::size_t>(item_count) + 1);
  for (const auto& seq : train_sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      int src = seq[t];
      if (src < 1 || src > item_count)
        throw ValidationError("item id " + std::to_string(src) +
                              " outside vocabulary");
      for (int delta = 1; delta <= k; ++delta) {
        std::size_t u = t + static_cast<std::size_t>(delta);
        if (u >= seq.size()) break;
        acc[static_cast<std::size_t>(src)][seq[u]] += 1;
      }
    }
  }
  TransitionGraph g;
  g.item_count = item_count;
  g.k = k;
  g.rows.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    g.rows[i].assign(acc[i].begin(), acc[i].end());  // map order = sorted ids
  return g;
}

std::vector<std::pair<int, double>> row_normalize(const TransitionGraph& g,
                                                  int i) {
  const auto& row = g.row(i);
  std::vector<std::pair<int, double>> out;
  if (row.empty()) return out;
  int max_count = 0;
  for (const auto& [j, c] : row) max_count = std::max(max_count, c);
  out.reserve(row.size());
  for (const auto& [j, c] : row)
    out.emplace_back(j, static_cast<double>(c) / static_cast<double>(max_count));
  return out;
}

std::optional<Vector> pseudo_label_row(const TransitionGraph& g, int i,
                                       double tau) {
  auto normalized = row_normalize(g, i);
  if (normalized.empty()) return std::nullopt;
  Matrix logits = Matrix::Zero(1, g.item_count);
  for (const auto& [j, v] : normalized) logits(0, j - 1) = v;
  Matrix p = softmax_rows_value(std::move(logits), tau);
  return Vector(p.row(0).transpose());
}

std::vector<int> transition_recommend(
    const TransitionGraph& g, int current, int top_n,
    const std::unordered_set<int>& exclusions) {
  if (top_n < 1) throw ParameterError("top_n must be >= 1");
  const auto& row = g.row(current);
  std::vector<std::pair<int, int>> positive(row.begin(), row.end());
  std::sort(positive.begin(), positive.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(top_n));
  std::unordered_set<int> seen;
  for (const auto& [j, c] : positive) {
    if (static_cast<int>(out.size()) == top_n) return out;
    if (exclusions.count(j)) continue;
    out.push_back(j);
    seen.insert(j);
  }
  for (int j = 1; j <= g.item_count && static_cast<int>(out.size()) < top_n; ++j)
    if (!seen.count(j) && !exclusions.count(j)) out.push_back(j);
  return out;
}

int transition_frequency(const TransitionGraph& g, int i, int j) {
  if (i < 1 || i > g.item_count || j < 1 || j > g.item_count) return 0;
  const auto& row = g.rows[static_cast<std::size_t>(i)];
  auto it = std::lower_bound(
      row.begin(), row.end(), j,
      [](const std::pair<int, int>& e, int key) { return e.first < key; });
  return (it != row.end() && it->first == j) ? it->second : 0;
}

std::int64_t total_transition_count(const TransitionGraph& g) {
  std::int64_t total = 0;
  for (const auto& row : g.rows)
    for (const auto& [j, c] : row) total += c;
  return total;
}

void write_graph(const TransitionGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  for (int i = 1; i <= g.item_count; ++i)
    for (const auto& [j, c] : g.rows[static_cast<std::size_t>(i)])
      out << i << '\t' << j << '\t' << c << '\n';
  if (!out) throw DatasetError("write failed for " + path);
}

}  // namespace mqsa

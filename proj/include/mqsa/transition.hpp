#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mqsa/common.hpp"

namespace mqsa {

// Directed item-transition graph over the train split: every ordered pair
// (s_t, s_{t+delta}) with 1 <= delta <= k adds one count. Rows are sparse,
// sorted by target id; an absent entry means frequency 0.
struct TransitionGraph {
  int item_count = 0;
  int k = 1;
  std::vector<std::vector<std::pair<int, int>>> rows;  // [source] -> (target, count)

  const std::vector<std::pair<int, int>>& row(int i) const {
    if (i < 1 || i > item_count)
      throw ParameterError("item id " + std::to_string(i) + " outside [1," +
                           std::to_string(item_count) + "]");
    return rows[static_cast<std::size_t>(i)];
  }
};

TransitionGraph build_transition_graph(
    const std::vector<std::vector<int>>& train_sequences, int item_count,
    int k);

// Row counts divided by the row maximum; the max maps to exactly 1.0.
std::vector<std::pair<int, double>> row_normalize(const TransitionGraph& g,
                                                  int i);

// Dense distillation target over all items: normalized counts (0 where
// absent) pushed through softmax at temperature tau. Entry j-1 is item j.
// Rows with no outgoing transitions have no usable distribution -> nullopt.
std::optional<Vector> pseudo_label_row(const TransitionGraph& g, int i,
                                       double tau);

// Heuristic recommender: candidates by frequency descending, ties and
// zero-frequency items by ascending id, exclusions removed.
std::vector<int> transition_recommend(
    const TransitionGraph& g, int current, int top_n,
    const std::unordered_set<int>& exclusions);

int transition_frequency(const TransitionGraph& g, int i, int j);

std::int64_t total_transition_count(const TransitionGraph& g);

// Text dump, one line `source<TAB>target<TAB>count`, sorted by (source, target).
void write_graph(const TransitionGraph& g, const std::string& path);

}  // namespace mqsa

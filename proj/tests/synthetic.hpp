#pragma once

#include <cstdint>

#include "mqsa/dataio.hpp"
#include "mqsa/rng.hpp"

namespace mqsa {

// Synthetic corpus mixing two signals: each user favors one item cluster
// (static preference), and every item has a planted within-cluster
// successor that tends to follow it (first-order transitions). Per step:
// with follow_prob the next item is the previous item's successor, with
// noise_prob it is uniform over all items, otherwise uniform over the
// user's cluster.
struct SyntheticConfig {
  int item_count = 200;
  int clusters = 5;  // must divide item_count
  int users = 2000;
  int min_len = 20;
  int max_len = 40;
  double follow_prob = 0.55;
  double noise_prob = 0.10;
  std::uint64_t seed = 1;
};

// Planted successor: the next item inside the same cluster, wrapping.
int ring_successor(const SyntheticConfig& cfg, int item);

InteractionDataset synthetic_corpus(const SyntheticConfig& cfg);

}  // namespace mqsa

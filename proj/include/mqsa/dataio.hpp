#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqsa/common.hpp"
#include "mqsa/rng.hpp"

namespace mqsa {

// Item ids are 1-based; 0 is reserved for padding and never appears in a
// stored sequence. Sequences are chronological as ingested.
struct InteractionDataset {
  std::vector<std::int64_t> user_ids;       // original ids, one per row
  std::vector<std::vector<int>> sequences;  // parallel to user_ids
  int item_count = 0;                       // max id seen

  int user_count() const { return static_cast<int>(sequences.size()); }
};

// Leave-one-out split: per eligible user (length >= 3),
// original = train ++ [valid_target] ++ [test_target]. Shorter users keep
// their whole sequence in train and carry target 0 (= absent).
struct SplitDataset {
  std::vector<std::vector<int>> train;
  std::vector<int> valid_target;
  std::vector<int> test_target;
  int item_count = 0;

  int user_count() const { return static_cast<int>(train.size()); }
  bool eligible(int u) const {
    return valid_target[static_cast<std::size_t>(u)] != 0 &&
           test_target[static_cast<std::size_t>(u)] != 0;
  }
};

// Fixed-length training batch, left-padded with 0. target(b,t) is the item
// following items(b,t) in the user's train sequence; mask is true exactly
// where target != 0.
struct Batch {
  IntMatrix items;
  IntMatrix targets;
  MaskMatrix mask;
  std::vector<int> users;  // row -> user index in the split
};

struct DatasetStats {
  std::int64_t users = 0;
  std::int64_t items = 0;
  std::int64_t actions = 0;
  double density = 0.0;
  double avg_len = 0.0;
};

// Plain-text format: one user per line, `user_id<TAB>item item ...`,
// base-10 ids >= 1, chronological order.
InteractionDataset load_sequences(const std::string& path);
void write_sequences(const InteractionDataset& ds, const std::string& path);

SplitDataset leave_one_out_split(const InteractionDataset& ds);
DatasetStats dataset_stats(const InteractionDataset& ds);

// One epoch of batches over the train split, user order shuffled by rng at
// construction. Users with fewer than two train items produce no supervised
// position and are skipped. The final batch may be ragged.
class BatchIter {
 public:
  BatchIter(const SplitDataset& split, Index max_len, Index batch_size,
            SplitMix64& rng);

  // Fills `out` and returns true, or returns false at end of epoch.
  bool next(Batch& out);

 private:
  const SplitDataset* split_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
  Index max_len_;
  Index batch_size_;
};

}  // namespace mqsa

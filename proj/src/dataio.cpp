#include "mqsa/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mqsa {

namespace {

std::int64_t parse_int(std::string_view token, int line_no, const char* what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what +
                     " '" + std::string(token) + "'");
  return value;
}

}  // namespace

InteractionDataset load_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path);
  InteractionDataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": missing tab");
    std::int64_t user = parse_int(std::string_view(line).substr(0, tab),
                                  line_no, "user id");
    std::vector<int> seq;
    std::istringstream items(line.substr(tab + 1));
    std::string token;
    while (items >> token) {
      std::int64_t id = parse_int(token, line_no, "item id");
      if (id < 1)
        throw ValidationError("line " + std::to_string(line_no) +
                              ": item id must be >= 1, got " +
                              std::to_string(id));
      seq.push_back(static_cast<int>(id));
      ds.item_count = std::max(ds.item_count, static_cast<int>(id));
    }
    if (seq.empty())
      throw ParseError("line " + std::to_string(line_no) + ": no items");
    ds.user_ids.push_back(user);
    ds.sequences.push_back(std::move(seq));
  }
  if (ds.sequences.empty()) throw DatasetError("no sequences in " + path);
  return ds;
}

void write_sequences(const InteractionDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  for (std::size_t u = 0; u < ds.sequences.size(); ++u) {
    out << ds.user_ids[u] << '\t';
    const auto& seq = ds.sequences[u];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << seq[i];
    }
    out << '\n';
  }
  if (!out) throw DatasetError("write failed for " + path);
}

SplitDataset leave_one_out_split(const InteractionDataset& ds) {
  SplitDataset split;
  split.item_count = ds.item_count;
  split.train.reserve(ds.sequences.size());
  split.valid_target.reserve(ds.sequences.size());
  split.test_target.reserve(ds.sequences.size());
  for (const auto& seq : ds.sequences) {
    if (seq.size() >= 3) {
      split.train.emplace_back(seq.begin(), seq.end() - 2);
      split.valid_target.push_back(seq[seq.size() - 2]);
      split.test_target.push_back(seq.back());
    } else {
      split.train.push_back(seq);
      split.valid_target.push_back(0);
      split.test_target.push_back(0);
    }
  }
  return split;
}

DatasetStats dataset_stats(const InteractionDataset& ds) {
  DatasetStats s;
  s.users = static_cast<std::int64_t>(ds.sequences.size());
  s.items = ds.item_count;
  for (const auto& seq : ds.sequences)
    s.actions += static_cast<std::int64_t>(seq.size());
  if (s.users > 0 && s.items > 0) {
    s.density = static_cast<double>(s.actions) /
                (static_cast<double>(s.users) * static_cast<double>(s.items));
    s.avg_len = static_cast<double>(s.actions) / static_cast<double>(s.users);
  }
  return s;
}

BatchIter::BatchIter(const SplitDataset& split, Index max_len, Index batch_size,
                     SplitMix64& rng)
    : split_(&split), max_len_(max_len), batch_size_(batch_size) {
  if (max_len < 1 || batch_size < 1)
    throw ParameterError("batch_iter needs max_len >= 1 and batch_size >= 1");
  order_.reserve(split.train.size());
  for (int u = 0; u < split.user_count(); ++u)
    if (split.train[static_cast<std::size_t>(u)].size() >= 2) order_.push_back(u);
  rng.shuffle(order_);
}

bool BatchIter::next(Batch& out) {
  if (pos_ >= order_.size()) return false;
  Index rows = std::min<Index>(batch_size_,
                               static_cast<Index>(order_.size() - pos_));
  out.items = IntMatrix::Zero(rows, max_len_);
  out.targets = IntMatrix::Zero(rows, max_len_);
  out.mask = MaskMatrix::Zero(rows, max_len_);
  out.users.assign(static_cast<std::size_t>(rows), 0);
  for (Index r = 0; r < rows; ++r) {
    int u = order_[pos_ + static_cast<std::size_t>(r)];
    out.users[static_cast<std::size_t>(r)] = u;
    const auto& seq = split_->train[static_cast<std::size_t>(u)];
    // Most recent max_len+1 items; first max_len are inputs, shifted-by-one
    // are targets; both pushed to the right of the row.
    std::size_t take = std::min(seq.size(),
                                static_cast<std::size_t>(max_len_) + 1);
    std::size_t start = seq.size() - take;
    Index pairs = static_cast<Index>(take) - 1;
    for (Index p = 0; p < pairs; ++p) {
      Index col = max_len_ - pairs + p;
      out.items(r, col) = seq[start + static_cast<std::size_t>(p)];
      out.targets(r, col) = seq[start + static_cast<std::size_t>(p) + 1];
      out.mask(r, col) = 1;
    }
  }
  pos_ += static_cast<std::size_t>(rows);
  return true;
}

}  // namespace mqsa

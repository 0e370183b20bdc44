#include <bit>
#include <cstring>
#include <fstream>

#include "mqsa/model.hpp"

namespace mqsa {

namespace {

constexpr char kMagic[8] = {'M', 'Q', 'S', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_i64(std::ostream& out, std::int64_t v) {
  std::uint64_t u = static_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  put_i64(out, static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(v)));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw CheckpointError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::int64_t get_i64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw CheckpointError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return static_cast<std::int64_t>(v);
}

double get_f64(std::istream& in) {
  return std::bit_cast<double>(static_cast<std::uint64_t>(get_i64(in)));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(kMagic, 8);
  put_u32(out, kVersion);
  put_i64(out, cfg.d);
  put_i64(out, cfg.n);
  put_i64(out, cfg.num_blocks);
  put_i64(out, cfg.L);
  put_f64(out, cfg.alpha);
  put_f64(out, cfg.dropout_rate);
  put_f64(out, cfg.tau);
  put_f64(out, cfg.lambda_kd);
  put_f64(out, cfg.lambda_l2);
  put_i64(out, params.item_count);
  std::uint32_t count = 0;
  visit_params(params, [&](const std::string&, const Matrix&) { ++count; });
  put_u32(out, count);
  visit_params(params, [&](const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_i64(out, m.rows());
    put_i64(out, m.cols());
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  });
  if (!out) throw CheckpointError("write failed for " + path);
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError(path + " is not a checkpoint");
  std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  ModelConfig cfg;
  cfg.d = get_i64(in);
  cfg.n = get_i64(in);
  cfg.num_blocks = get_i64(in);
  cfg.L = get_i64(in);
  cfg.alpha = get_f64(in);
  cfg.dropout_rate = get_f64(in);
  cfg.tau = get_f64(in);
  cfg.lambda_kd = get_f64(in);
  cfg.lambda_l2 = get_f64(in);
  std::int64_t item_count = get_i64(in);
  cfg.validate();
  if (item_count < 1) throw CheckpointError("bad item count");

  SplitMix64 unused(0);
  ModelParams params = init_params(cfg, static_cast<int>(item_count), unused);
  std::uint32_t count = get_u32(in);
  std::uint32_t expect = 0;
  visit_params(params, [&](const std::string&, const Matrix&) { ++expect; });
  if (count != expect)
    throw CheckpointError("checkpoint holds " + std::to_string(count) +
                          " arrays, model needs " + std::to_string(expect));
  visit_params(params, [&](const std::string& name, Matrix& m) {
    std::uint32_t len = get_u32(in);
    std::string got(len, '\0');
    in.read(got.data(), len);
    if (!in || got != name)
      throw CheckpointError("expected array '" + name + "', found '" + got +
                            "'");
    std::int64_t rows = get_i64(in), cols = get_i64(in);
    if (rows != m.rows() || cols != m.cols())
      throw CheckpointError("array '" + name + "' is " + std::to_string(rows) +
                            "x" + std::to_string(cols) + ", expected " +
                            shape_str(m));
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = get_f64(in);
  });
  return {cfg, std::move(params)};
}

}  // namespace mqsa

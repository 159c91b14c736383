#include "mlmkit/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "mlmkit/common.hpp"

namespace mlmkit {

namespace {

constexpr char kModelMagic[4] = {'M', 'L', 'M', 'F'};
constexpr char kTrainMagic[4] = {'M', 'L', 'M', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError(path + ": truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw DataError(path + ": truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return {{"layers", cfg.layers},
          {"hidden", cfg.hidden},
          {"heads", cfg.heads},
          {"d_ff", cfg.d_ff},
          {"vocab_size", cfg.vocab_size},
          {"max_positions", cfg.max_positions},
          {"dropout", cfg.dropout},
          {"tie_mlm_head", cfg.tie_mlm_head},
          {"pre_norm", cfg.pre_norm}};
}

ModelConfig config_from_json(const nlohmann::json& j, const std::string& path) {
  ModelConfig cfg;
  try {
    cfg.layers = j.at("layers").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.max_positions = j.at("max_positions").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.tie_mlm_head = j.at("tie_mlm_head").get<bool>();
    cfg.pre_norm = j.at("pre_norm").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad model header: " + e.what());
  }
  cfg.validate();
  return cfg;
}

void write_header(std::ostream& out, const char magic[4],
                  const nlohmann::json& header) {
  out.write(magic, 4);
  write_u32(out, kFormatVersion);
  std::string text = header.dump();
  write_u64(out, text.size());
  out.write(text.data(), std::streamsize(text.size()));
}

nlohmann::json read_header(std::istream& in, const char magic[4],
                           const std::string& path) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw DataError(path + ": not a recognized model file (bad magic)");
  std::uint32_t version = read_u32(in, path);
  if (version != kFormatVersion)
    throw DataError(path + ": unsupported format version " +
                    std::to_string(version));
  std::uint64_t len = read_u64(in, path);
  std::string text(len, '\0');
  if (!in.read(text.data(), std::streamsize(len)))
    throw DataError(path + ": truncated header");
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError(path + ": header is not valid JSON");
  return j;
}

// Tensors are stored row-major regardless of the in-memory layout so the
// file format is self-describing.
template <class Scalar>
void write_tensor(std::ostream& out, const Eigen::MatrixXd& t) {
  write_u64(out, std::uint64_t(t.size()));
  std::vector<Scalar> buf;
  buf.reserve(std::size_t(t.size()));
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      buf.push_back(static_cast<Scalar>(t(i, j)));
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size() * sizeof(Scalar)));
}

template <class Scalar>
void read_tensor(std::istream& in, Eigen::MatrixXd& t, const std::string& name,
                 const std::string& path) {
  std::uint64_t count = read_u64(in, path);
  if (count != std::uint64_t(t.size()))
    throw DataError(path + ": tensor " + name + " holds " +
                    std::to_string(count) + " values, expected " +
                    std::to_string(t.size()));
  std::vector<Scalar> buf(count);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               std::streamsize(count * sizeof(Scalar))))
    throw DataError(path + ": truncated tensor " + name);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      t(i, j) = static_cast<double>(buf[k++]);
}

template <class Scalar>
void write_tensor(std::ostream& out, const Eigen::VectorXd& t) {
  write_u64(out, std::uint64_t(t.size()));
  std::vector<Scalar> buf;
  buf.reserve(std::size_t(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i)
    buf.push_back(static_cast<Scalar>(t(i)));
  out.write(reinterpret_cast<const char*>(buf.data()),
            std::streamsize(buf.size() * sizeof(Scalar)));
}

template <class Scalar>
void read_tensor(std::istream& in, Eigen::VectorXd& t, const std::string& name,
                 const std::string& path) {
  std::uint64_t count = read_u64(in, path);
  if (count != std::uint64_t(t.size()))
    throw DataError(path + ": tensor " + name + " holds " +
                    std::to_string(count) + " values, expected " +
                    std::to_string(t.size()));
  std::vector<Scalar> buf(count);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               std::streamsize(count * sizeof(Scalar))))
    throw DataError(path + ": truncated tensor " + name);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    t(i) = static_cast<double>(buf[i]);
}

template <class Scalar>
void write_all_tensors(std::ostream& out, const Parameters& params) {
  params.for_each_tensor([&](const std::string&, bool, const auto& t) {
    write_tensor<Scalar>(out, t);
  });
}

template <class Scalar>
void read_all_tensors(std::istream& in, Parameters& params,
                      const std::string& path) {
  params.for_each_tensor([&](const std::string& name, bool, auto& t) {
    read_tensor<Scalar>(in, t, name, path);
  });
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  return in;
}

}  // namespace

void save_checkpoint(const std::string& path, const Parameters& params,
                     std::uint64_t vocab_hash, std::uint64_t step) {
  std::ofstream out = open_out(path);
  nlohmann::json header = {{"model", config_to_json(params.cfg)},
                           {"vocab_hash", hex64(vocab_hash)},
                           {"step", step}};
  write_header(out, kModelMagic, header);
  write_all_tensors<float>(out, params);
  if (!out) throw DataError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path);
  nlohmann::json header = read_header(in, kModelMagic, path);
  Checkpoint ckpt;
  if (!header.contains("model") || !header.contains("vocab_hash") ||
      !header.contains("step"))
    throw DataError(path + ": incomplete header");
  ModelConfig cfg = config_from_json(header["model"], path);
  ckpt.vocab_hash =
      std::stoull(header["vocab_hash"].get<std::string>(), nullptr, 16);
  ckpt.step = header["step"].get<std::uint64_t>();
  ckpt.params = Parameters::zeros(cfg);
  read_all_tensors<float>(in, ckpt.params, path);
  char extra;
  if (in.read(&extra, 1)) throw DataError(path + ": trailing bytes");
  return ckpt;
}

nlohmann::json checkpoint_info(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_header(in, kModelMagic, path);
}

void save_train_state(const std::string& path, const TrainState& state) {
  std::ofstream out = open_out(path);
  nlohmann::json header = {{"model", config_to_json(state.params.cfg)},
                           {"step", state.step}};
  write_header(out, kTrainMagic, header);
  write_all_tensors<double>(out, state.params);
  write_all_tensors<double>(out, state.m);
  write_all_tensors<double>(out, state.v);
  if (!out) throw DataError(path + ": write failed");
}

TrainState load_train_state(const std::string& path) {
  std::ifstream in = open_in(path);
  nlohmann::json header = read_header(in, kTrainMagic, path);
  if (!header.contains("model") || !header.contains("step"))
    throw DataError(path + ": incomplete header");
  ModelConfig cfg = config_from_json(header["model"], path);
  TrainState state;
  state.step = header["step"].get<std::uint64_t>();
  state.params = Parameters::zeros(cfg);
  state.m = Parameters::zeros(cfg);
  state.v = Parameters::zeros(cfg);
  read_all_tensors<double>(in, state.params, path);
  read_all_tensors<double>(in, state.m, path);
  read_all_tensors<double>(in, state.v, path);
  char extra;
  if (in.read(&extra, 1)) throw DataError(path + ": trailing bytes");
  return state;
}

}  // namespace mlmkit

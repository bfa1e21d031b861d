#include "nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace autoasm::nn {

namespace {

constexpr char kMagic[8] = {'A', 'A', 'S', 'M', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) fail(ErrorCode::CorruptFile, "checkpoint is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

template <class P>
void write_file(const std::string& path, NetKind kind, const NetConfig& c, P& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  for (int v : {c.d_emb, c.hidden, c.pairs, c.cells(), vocab::kSize, c.space.num_registers,
                c.space.ram_enabled ? 1 : 0})
    put<std::int32_t>(out, v);
  put<std::uint64_t>(out, parameter_count(params));
  params.visit([&](Tensor& t) {
    for (double v : t.data) put<double>(out, v);
  });
  if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

CheckpointHeader read_header(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    fail(ErrorCode::CorruptFile, "not a checkpoint file");
  CheckpointHeader h;
  h.version = get<std::uint32_t>(in);
  if (h.version != kCheckpointVersion)
    fail(ErrorCode::VersionMismatch, "checkpoint format version " + std::to_string(h.version) + " is not supported");
  const auto kind = get<std::uint32_t>(in);
  if (kind > 1) fail(ErrorCode::CorruptFile, "unknown network kind");
  h.kind = static_cast<NetKind>(kind);
  h.config.d_emb = get<std::int32_t>(in);
  h.config.hidden = get<std::int32_t>(in);
  h.config.pairs = get<std::int32_t>(in);
  const int cells = get<std::int32_t>(in);
  h.vocab = get<std::int32_t>(in);
  h.config.space.num_registers = get<std::int32_t>(in);
  h.config.space.ram_enabled = get<std::int32_t>(in) != 0;
  h.parameter_count = get<std::uint64_t>(in);
  if (h.config.d_emb < 1 || h.config.hidden < 1 || h.config.pairs < 1 || h.config.space.num_registers < 1 ||
      h.config.space.num_registers > kNumRegisters || cells != h.config.cells())
    fail(ErrorCode::CorruptFile, "checkpoint architecture descriptor is inconsistent");
  if (h.vocab != vocab::kSize) fail(ErrorCode::VersionMismatch, "checkpoint vocabulary size differs");
  return h;
}

void check_expected(const CheckpointHeader& h, NetKind kind, const std::optional<NetConfig>& expected) {
  if (h.kind != kind)
    fail(ErrorCode::VersionMismatch, kind == NetKind::Policy ? "checkpoint holds a value network, expected a policy"
                                                             : "checkpoint holds a policy, expected a value network");
  if (expected && !(*expected == h.config)) {
    std::ostringstream os;
    os << "checkpoint architecture (d_emb=" << h.config.d_emb << ", hidden=" << h.config.hidden
       << ", K=" << h.config.pairs << ", cells=" << h.config.cells() << ") differs from the expected one (d_emb="
       << expected->d_emb << ", hidden=" << expected->hidden << ", K=" << expected->pairs
       << ", cells=" << expected->cells() << ")";
    fail(ErrorCode::VersionMismatch, os.str());
  }
}

template <class P>
void read_params(std::istream& in, const CheckpointHeader& h, P& params) {
  if (parameter_count(params) != h.parameter_count)
    fail(ErrorCode::CorruptFile, "parameter count does not match the architecture descriptor");
  params.visit([&](Tensor& t) {
    for (double& v : t.data) v = get<double>(in);
  });
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::CorruptFile, "trailing bytes after parameters");
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return in;
}

}  // namespace

void save_policy(const PolicyNet& net, const std::string& path) {
  auto params = net.params;
  write_file(path, NetKind::Policy, net.config, params);
}

void save_value(const ValueNet& net, const std::string& path) {
  auto params = net.params;
  write_file(path, NetKind::Value, net.config, params);
}

PolicyNet load_policy(const std::string& path, const std::optional<NetConfig>& expected) {
  auto in = open(path);
  const CheckpointHeader h = read_header(in);
  check_expected(h, NetKind::Policy, expected);
  PolicyNet net = PolicyNet::create(h.config, 0);
  read_params(in, h, net.params);
  return net;
}

ValueNet load_value(const std::string& path, const std::optional<NetConfig>& expected) {
  auto in = open(path);
  const CheckpointHeader h = read_header(in);
  check_expected(h, NetKind::Value, expected);
  ValueNet net = ValueNet::create(h.config, 0);
  read_params(in, h, net.params);
  return net;
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  auto in = open(path);
  return read_header(in);
}

std::string describe_checkpoint(const CheckpointHeader& h) {
  std::ostringstream os;
  os << "checkpoint: " << (h.kind == NetKind::Policy ? "policy" : "value") << " network\n"
     << "format version: " << h.version << "\n"
     << "d_emb: " << h.config.d_emb << "\n"
     << "hidden: " << h.config.hidden << "\n"
     << "K: " << h.config.pairs << "\n"
     << "cells: " << h.config.cells() << " (registers " << h.config.space.num_registers << ", ram "
     << (h.config.space.ram_enabled ? "on" : "off") << ")\n"
     << "vocab: " << h.vocab << "\n"
     << "parameters: " << h.parameter_count << "\n";
  return os.str();
}

}  // namespace autoasm::nn

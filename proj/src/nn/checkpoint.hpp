#pragma once

#include <optional>
#include <string>

#include "nn/network.hpp"

namespace autoasm::nn {

// Binary layout, little-endian:
//   8 bytes   magic "AASMCKPT"
//   u32       format version
//   u32       kind (0 = policy, 1 = value)
//   i32 x 7   d_emb, hidden, K, cells, vocab, num_registers, ram_enabled
//   u64       parameter count
//   f64 x n   parameters in declaration order
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class NetKind : std::uint32_t { Policy = 0, Value = 1 };

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  NetKind kind = NetKind::Policy;
  NetConfig config;
  int vocab = vocab::kSize;
  std::uint64_t parameter_count = 0;
};

void save_policy(const PolicyNet& net, const std::string& path);
void save_value(const ValueNet& net, const std::string& path);

/// Throws VersionMismatch when the file's version, kind, or architecture
/// differs from `expected`, CorruptFile when it is truncated or malformed.
PolicyNet load_policy(const std::string& path, const std::optional<NetConfig>& expected = std::nullopt);
ValueNet load_value(const std::string& path, const std::optional<NetConfig>& expected = std::nullopt);

CheckpointHeader read_checkpoint_header(const std::string& path);
std::string describe_checkpoint(const CheckpointHeader& header);

}  // namespace autoasm::nn

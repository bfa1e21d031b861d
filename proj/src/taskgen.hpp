#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "machine.hpp"
#include "rng.hpp"

namespace autoasm {

struct IoPair {
  MachineState input;
  MachineState output;

  friend bool operator==(const IoPair&, const IoPair&) = default;
};

struct Task {
  std::int64_t id = 0;
  std::vector<IoPair> pairs;
  std::optional<Program> gold;

  bool solved_by(const Program& prog) const;
  friend bool operator==(const Task&, const Task&) = default;
};

struct PilotConfig {
  int program_length = 3;
  int num_registers = 4;
  bool ram_enabled = false;
  int pairs_per_task = 2;
  int init_low = 0;
  int init_high = 9;

  SpaceConfig space() const { return SpaceConfig{num_registers, ram_enabled}; }
  void validate() const;
};

/// How success/failure moves a task's sampling weight.
struct WeightRule {
  double w_max = 10.0;
  // Flipped sign: +1 on success, -1 on failure.
  bool literal_alg1_sign = false;
};

struct TaskPool {
  PilotConfig config;
  std::vector<Task> tasks;
  std::vector<double> weights;

  std::size_t size() const { return tasks.size(); }
  bool empty() const { return tasks.empty(); }
};

struct PoolBuildStats {
  std::size_t duplicates_dropped = 0;
  std::size_t degenerate_programs = 0;
};

Program generate_pilot_program(const PilotConfig& config, Rng& rng);

/// K random start states run through `prog`. Resamples when every pair is an
/// identity mapping; throws DegenerateTask after 100 such draws in a row.
Task make_task(const Program& prog, const PilotConfig& config, Rng& rng);

TaskPool build_pool(std::size_t n, const PilotConfig& config, Rng& rng, PoolBuildStats* stats = nullptr);

/// Order-independent fingerprint of a task's IO pairs.
std::uint64_t pair_multiset_hash(const Task& task);
bool same_pair_multiset(const Task& a, const Task& b);

/// softmax(weights), computed with max subtraction.
std::vector<double> sampling_probabilities(const std::vector<double>& weights);

/// Indices of `b` tasks drawn i.i.d. with replacement from softmax(weights).
std::vector<std::size_t> sample_batch(const TaskPool& pool, std::size_t b, Rng& rng);

void update_weight(TaskPool& pool, std::int64_t task_id, bool success, const WeightRule& rule = {});

// ---------------------------------------------------------------------------
// Pool files: one JSON header line, then one JSON record per task.

inline constexpr int kPoolFormatVersion = 1;

void write_pool(std::ostream& out, const TaskPool& pool);
TaskPool read_pool(std::istream& in);
void save_pool(const std::string& path, const TaskPool& pool);
TaskPool load_pool(const std::string& path);

/// Human-readable summary used by `inspect`: size, config, weight histogram.
std::string describe_pool(const TaskPool& pool);

}  // namespace autoasm

#pragma once

// Policy/value-guided Monte Carlo tree search over straight-line programs.
//
// One simulation is select -> expand -> evaluate -> backup. Selection uses
//   R_c / N_c + epsilon * sqrt(2 ln(P_c) / N_c)
// over the children of the current node. Expansion samples one untried action
// from the policy (at most `expansion_width` children per node). Evaluation
// rolls the policy forward and falls back to the value estimate when the
// rollout budget runs out. A program is assembled by committing the most
// visited root action and re-rooting the tree at that child.

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "machine.hpp"
#include "nn/network.hpp"
#include "rng.hpp"
#include "taskgen.hpp"

namespace autoasm {

struct SearchConfig {
  double epsilon = 1.0;
  double gamma = 0.9;
  int max_depth = 12;
  int rollout_limit = 5;
  int simulations_per_move = 200;
  int expansion_width = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Guidance interfaces. Contexts are computed once per tree node and reused
// for every expansion from that node.

class SearchPolicy {
 public:
  virtual ~SearchPolicy() = default;
  virtual const ActionSpace& space() const = 0;
  virtual std::vector<double> prepare(std::span<const MachineState> states,
                                      std::span<const MachineState> targets) const = 0;
  /// Index into space() drawn from pi(. | context).
  virtual std::size_t sample(const std::vector<double>& context, Rng& rng) const = 0;
  virtual std::vector<double> probabilities(const std::vector<double>& context) const = 0;
};

class StateEvaluator {
 public:
  virtual ~StateEvaluator() = default;
  /// Estimated discounted return from `states`, in [0, 1].
  virtual double value(std::span<const MachineState> states, std::span<const MachineState> targets) const = 0;
};

class UniformPolicy final : public SearchPolicy {
 public:
  explicit UniformPolicy(const SpaceConfig& space) : space_(space) {}
  const ActionSpace& space() const override { return space_; }
  std::vector<double> prepare(std::span<const MachineState>, std::span<const MachineState>) const override {
    return {};
  }
  std::size_t sample(const std::vector<double>&, Rng& rng) const override { return rng.below(space_.size()); }
  std::vector<double> probabilities(const std::vector<double>&) const override {
    return std::vector<double>(space_.size(), 1.0 / static_cast<double>(space_.size()));
  }

 private:
  ActionSpace space_;
};

/// Policy network guidance. When a task has a different number of pairs than
/// the network was built for, pairs are reused cyclically to fill its K slots.
class NetworkPolicy final : public SearchPolicy {
 public:
  explicit NetworkPolicy(const nn::PolicyNet& net) : net_(net), space_(net.config.space) {}
  const ActionSpace& space() const override { return space_; }
  std::vector<double> prepare(std::span<const MachineState> states,
                              std::span<const MachineState> targets) const override;
  std::size_t sample(const std::vector<double>& context, Rng& rng) const override;
  std::vector<double> probabilities(const std::vector<double>& context) const override;

 private:
  const nn::PolicyNet& net_;
  ActionSpace space_;
};

/// V_phi over all pairs jointly when the pair count matches the network,
/// otherwise the mean of per-pair estimates.
class NetworkValue final : public StateEvaluator {
 public:
  explicit NetworkValue(const nn::ValueNet& net) : net_(net) {}
  double value(std::span<const MachineState> states, std::span<const MachineState> targets) const override;

 private:
  const nn::ValueNet& net_;
};

/// 1 / (1 + L2 distance to the target), averaged over pairs.
class DistanceHeuristic final : public StateEvaluator {
 public:
  double value(std::span<const MachineState> states, std::span<const MachineState> targets) const override;
};

double l2_distance(const MachineState& a, const MachineState& b);

/// Encoding of (states, targets) sized for a network built for `pairs` pairs.
nn::StateEncoding encode_for_network(std::span<const MachineState> states, std::span<const MachineState> targets,
                                     const SpaceConfig& space, int pairs);

// ---------------------------------------------------------------------------

struct SearchNode {
  std::vector<MachineState> states;  // one per IO pair
  int depth = 0;                     // lines below the current root
  std::optional<Instruction> action; // edge from the parent
  int action_index = -1;
  SearchNode* parent = nullptr;

  std::int64_t visits = 0;   // N
  double reward = 0.0;       // R, sum of backed-up returns
  std::int64_t evaluations = 0;  // returns evaluated at this node itself
  int untried = 0;           // remaining expansion budget
  bool solved = false;
  bool terminal = false;     // solved or at the program length limit

  std::vector<std::unique_ptr<SearchNode>> children;

  // Lazily computed policy data.
  std::optional<std::vector<double>> context;
  std::optional<std::vector<double>> probabilities;

  double mean_reward() const { return visits > 0 ? reward / static_cast<double>(visits) : 0.0; }
  bool has_child(int index) const;
};

double uct_score(const SearchNode& child, std::int64_t parent_visits, double epsilon);

/// Descends from `node` until a non-terminal node with expansion budget left
/// or a terminal node is reached.
SearchNode* select(SearchNode& node, const SearchConfig& config);

/// Adds the returned value to N and R of `node` and every ancestor.
void backup(SearchNode& node, double value);

class Mcts {
 public:
  Mcts(std::vector<MachineState> inputs, std::vector<MachineState> targets, const SearchPolicy& policy,
       const StateEvaluator& evaluator, SearchConfig config);

  SearchNode& root() { return *root_; }
  const SearchNode& root() const { return *root_; }
  int committed() const { return committed_; }
  const std::vector<MachineState>& targets() const { return targets_; }

  SearchNode& expand(SearchNode& node);
  double evaluate(SearchNode& node);
  void simulate();

  /// Runs simulations_per_move simulations and returns the chosen root child.
  SearchNode& search_step();

  /// Makes `child` (a child of the root) the new root, keeping its subtree.
  void advance(SearchNode& child);

  Rng& rng() { return rng_; }
  /// Simulator instruction executions so far, counted per pair.
  std::int64_t lines_executed() const { return lines_executed_; }

 private:
  std::unique_ptr<SearchNode> make_node(std::vector<MachineState> states, int depth) const;
  bool matches_targets(const std::vector<MachineState>& states) const;
  const std::vector<double>& context_of(SearchNode& node);

  std::vector<MachineState> targets_;
  const SearchPolicy& policy_;
  const StateEvaluator& evaluator_;
  SearchConfig config_;
  Rng rng_;
  std::unique_ptr<SearchNode> root_;
  int committed_ = 0;
  std::int64_t lines_executed_ = 0;
};

struct SynthesisResult {
  std::optional<Program> program;  // set only when verified by execution
  int steps_taken = 0;
  std::int64_t simulations = 0;
  std::int64_t lines_executed = 0;

  bool success() const { return program.has_value(); }
};

SynthesisResult synthesize(const Task& task, const SearchPolicy& policy, const StateEvaluator& evaluator,
                           const SearchConfig& config, std::ostream* trace = nullptr);

/// One JSON record per node: depth, action, N, R/N.
void dump_tree(const SearchNode& root, std::ostream& out, int committed = 0);

}  // namespace autoasm

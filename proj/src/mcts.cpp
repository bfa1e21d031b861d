#include "mcts.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "error.hpp"

namespace autoasm {

void SearchConfig::validate() const {
  if (!(epsilon >= 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::InvalidArgument, "gamma must be in (0, 1]");
  if (max_depth < 1 || rollout_limit < 1 || simulations_per_move < 1 || expansion_width < 1)
    fail(ErrorCode::InvalidArgument, "search limits must be >= 1");
}

// ---------------------------------------------------------------------------

nn::StateEncoding encode_for_network(std::span<const MachineState> states, std::span<const MachineState> targets,
                                     const SpaceConfig& space, int pairs) {
  if (states.empty() || states.size() != targets.size())
    fail(ErrorCode::ConfigMismatch, "state and target lists must be non-empty and equally long");
  if (static_cast<int>(states.size()) == pairs) return nn::encode_state(states, targets, space);
  std::vector<MachineState> cur, tgt;
  for (int k = 0; k < pairs; ++k) {
    cur.push_back(states[k % states.size()]);
    tgt.push_back(targets[k % targets.size()]);
  }
  return nn::encode_state(cur, tgt, space);
}

std::vector<double> NetworkPolicy::prepare(std::span<const MachineState> states,
                                           std::span<const MachineState> targets) const {
  const auto enc = encode_for_network(states, targets, net_.config.space, net_.config.pairs);
  return nn::encoder_forward(net_.params.enc, net_.config, enc).context();
}

std::size_t NetworkPolicy::sample(const std::vector<double>& context, Rng& rng) const {
  const auto a = nn::sample_action(net_, context, 1.0, rng);
  return static_cast<std::size_t>(space_.index_of(a.instr));
}

std::vector<double> NetworkPolicy::probabilities(const std::vector<double>& context) const {
  return nn::action_probabilities(net_, context, space_);
}

double NetworkValue::value(std::span<const MachineState> states, std::span<const MachineState> targets) const {
  const int pairs = net_.config.pairs;
  if (static_cast<int>(states.size()) == pairs)
    return nn::value_forward(net_, nn::encode_state(states, targets, net_.config.space));
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k)
    total += nn::value_forward(net_, encode_for_network(states.subspan(k, 1), targets.subspan(k, 1),
                                                        net_.config.space, pairs));
  return total / static_cast<double>(states.size());
}

double l2_distance(const MachineState& a, const MachineState& b) {
  double sq = 0.0;
  for (int r = 0; r < kNumRegisters; ++r) {
    const double d = static_cast<double>(a.regs[r]) - static_cast<double>(b.regs[r]);
    sq += d * d;
  }
  if (a.has_ram() && b.has_ram())
    for (int m = 0; m < kNumMemSlots; ++m) {
      const double d = static_cast<double>((*a.ram)[m]) - static_cast<double>((*b.ram)[m]);
      sq += d * d;
    }
  return std::sqrt(sq);
}

double DistanceHeuristic::value(std::span<const MachineState> states, std::span<const MachineState> targets) const {
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) total += 1.0 / (1.0 + l2_distance(states[k], targets[k]));
  return total / static_cast<double>(states.size());
}

// ---------------------------------------------------------------------------

bool SearchNode::has_child(int index) const {
  return std::any_of(children.begin(), children.end(), [&](const auto& c) { return c->action_index == index; });
}

double uct_score(const SearchNode& child, std::int64_t parent_visits, double epsilon) {
  const double n = static_cast<double>(child.visits);
  const double p = static_cast<double>(std::max<std::int64_t>(parent_visits, 1));
  return child.reward / n + epsilon * std::sqrt(2.0 * std::log(p) / n);
}

SearchNode* select(SearchNode& node, const SearchConfig& config) {
  SearchNode* cur = &node;
  while (!cur->terminal && cur->untried == 0 && !cur->children.empty()) {
    SearchNode* best = nullptr;
    double best_score = 0.0;
    for (const auto& c : cur->children) {
      if (c->visits == 0) {
        best = c.get();
        break;
      }
      const double s = uct_score(*c, cur->visits, config.epsilon);
      if (!best || s > best_score) {
        best = c.get();
        best_score = s;
      }
    }
    cur = best;
  }
  return cur;
}

void backup(SearchNode& node, double value) {
  for (SearchNode* n = &node; n; n = n->parent) {
    n->visits += 1;
    n->reward += value;
  }
}

// ---------------------------------------------------------------------------

Mcts::Mcts(std::vector<MachineState> inputs, std::vector<MachineState> targets, const SearchPolicy& policy,
           const StateEvaluator& evaluator, SearchConfig config)
    : targets_(std::move(targets)), policy_(policy), evaluator_(evaluator), config_(config), rng_(config.seed) {
  config_.validate();
  if (inputs.empty() || inputs.size() != targets_.size())
    fail(ErrorCode::InvalidArgument, "search needs one target per input state");
  root_ = make_node(std::move(inputs), 0);
}

bool Mcts::matches_targets(const std::vector<MachineState>& states) const {
  for (std::size_t k = 0; k < states.size(); ++k)
    if (!state_equals(states[k], targets_[k])) return false;
  return true;
}

std::unique_ptr<SearchNode> Mcts::make_node(std::vector<MachineState> states, int depth) const {
  auto node = std::make_unique<SearchNode>();
  node->states = std::move(states);
  node->depth = depth;
  node->solved = matches_targets(node->states);
  node->terminal = node->solved || committed_ + depth >= config_.max_depth;
  node->untried = node->terminal
                      ? 0
                      : static_cast<int>(std::min<std::size_t>(config_.expansion_width, policy_.space().size()));
  return node;
}

const std::vector<double>& Mcts::context_of(SearchNode& node) {
  if (!node.context) node.context = policy_.prepare(node.states, targets_);
  return *node.context;
}

SearchNode& Mcts::expand(SearchNode& node) {
  if (node.terminal || node.untried <= 0) fail(ErrorCode::NoLegalExpansion, "node has no expansion budget");
  const ActionSpace& space = policy_.space();
  const auto& ctx = context_of(node);

  // Rejection sampling is exact for "sample without replacement"; fall back
  // to the renormalized full distribution when most of the mass is taken.
  int index = -1;
  for (int attempt = 0; attempt < 16 && index < 0; ++attempt) {
    const int a = static_cast<int>(policy_.sample(ctx, rng_));
    if (!node.has_child(a)) index = a;
  }
  if (index < 0) {
    if (!node.probabilities) node.probabilities = policy_.probabilities(ctx);
    std::vector<double> w = *node.probabilities;
    for (const auto& c : node.children) w[c->action_index] = 0.0;
    double total = 0.0;
    for (double v : w) total += v;
    if (total <= 0.0) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = node.has_child(static_cast<int>(i)) ? 0.0 : 1.0;
      total = std::count(w.begin(), w.end(), 1.0);
    }
    if (total <= 0.0) fail(ErrorCode::NoLegalExpansion, "every action has already been expanded");
    index = static_cast<int>(rng_.categorical(w));
  }

  const Instruction& instr = space[static_cast<std::size_t>(index)];
  std::vector<MachineState> next;
  next.reserve(node.states.size());
  for (const auto& s : node.states) next.push_back(step(s, instr));
  lines_executed_ += static_cast<std::int64_t>(next.size());
  auto child = make_node(std::move(next), node.depth + 1);
  child->action = instr;
  child->action_index = index;
  child->parent = &node;
  node.untried -= 1;
  node.children.push_back(std::move(child));
  return *node.children.back();
}

double Mcts::evaluate(SearchNode& node) {
  if (node.solved) return 1.0;
  const int remaining = config_.max_depth - committed_ - node.depth;
  if (remaining <= 0) return 0.0;

  const ActionSpace& space = policy_.space();
  std::vector<MachineState> states = node.states;
  const int limit = std::min(config_.rollout_limit, remaining);
  double discount = 1.0;
  for (int d = 1; d <= limit; ++d) {
    const auto ctx = policy_.prepare(states, targets_);
    const Instruction& instr = space[policy_.sample(ctx, rng_)];
    for (auto& s : states) s = step(s, instr);
    lines_executed_ += static_cast<std::int64_t>(states.size());
    discount *= config_.gamma;
    if (matches_targets(states)) return discount;
  }
  const double v = std::clamp(evaluator_.value(states, targets_), 0.0, 1.0);
  return discount * v;
}

void Mcts::simulate() {
  SearchNode* leaf = select(*root_, config_);
  SearchNode* target = leaf;
  if (!leaf->terminal) target = &expand(*leaf);
  const double value = evaluate(*target);
  target->evaluations += 1;
  backup(*target, value);
}

SearchNode& Mcts::search_step() {
  if (root_->terminal) fail(ErrorCode::InvalidArgument, "search root is terminal");
  for (int i = 0; i < config_.simulations_per_move; ++i) simulate();
  if (root_->children.empty()) fail(ErrorCode::NoLegalExpansion, "search produced no root children");
  SearchNode* best = nullptr;
  for (const auto& c : root_->children) {
    if (!best || c->visits > best->visits ||
        (c->visits == best->visits && (c->mean_reward() > best->mean_reward() ||
                                       (c->mean_reward() == best->mean_reward() &&
                                        c->action_index < best->action_index))))
      best = c.get();
  }
  return *best;
}

void Mcts::advance(SearchNode& child) {
  auto it = std::find_if(root_->children.begin(), root_->children.end(),
                         [&](const auto& c) { return c.get() == &child; });
  if (it == root_->children.end()) fail(ErrorCode::InvalidArgument, "node is not a child of the root");
  std::unique_ptr<SearchNode> next = std::move(*it);
  next->parent = nullptr;
  root_ = std::move(next);
  committed_ += 1;
  std::vector<SearchNode*> stack{root_.get()};
  while (!stack.empty()) {
    SearchNode* n = stack.back();
    stack.pop_back();
    n->depth -= 1;
    for (auto& c : n->children) stack.push_back(c.get());
  }
}

// ---------------------------------------------------------------------------

SynthesisResult synthesize(const Task& task, const SearchPolicy& policy, const StateEvaluator& evaluator,
                           const SearchConfig& config, std::ostream* trace) {
  config.validate();
  SynthesisResult result;
  std::vector<MachineState> inputs, targets;
  for (const auto& p : task.pairs) {
    inputs.push_back(p.input);
    targets.push_back(p.output);
  }
  Program prog;
  if (task.solved_by(prog)) {
    result.program = prog;
    return result;
  }

  Mcts mcts(std::move(inputs), std::move(targets), policy, evaluator, config);
  while (mcts.committed() < config.max_depth) {
    SearchNode& best = mcts.search_step();
    result.simulations += config.simulations_per_move;
    if (trace) dump_tree(mcts.root(), *trace, mcts.committed());
    prog.push_back(*best.action);
    const bool solved = best.solved;
    mcts.advance(best);
    result.steps_taken = static_cast<int>(prog.size());
    if (solved) break;
  }
  result.lines_executed = mcts.lines_executed();
  // Search bookkeeping is never trusted on its own.
  if (task.solved_by(prog)) result.program = std::move(prog);
  return result;
}

void dump_tree(const SearchNode& root, std::ostream& out, int committed) {
  std::vector<const SearchNode*> stack{&root};
  while (!stack.empty()) {
    const SearchNode* n = stack.back();
    stack.pop_back();
    nlohmann::json rec = {{"depth", committed + n->depth},
                          {"action", n->action ? format_instruction(*n->action) : std::string()},
                          {"N", n->visits},
                          {"R/N", n->mean_reward()}};
    out << rec.dump() << '\n';
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(it->get());
  }
}

}  // namespace autoasm

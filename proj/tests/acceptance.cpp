// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only N]... [--seed S] [--jobs J] [--work DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "gradcheck.hpp"
#include "machine.hpp"
#include "mcts.hpp"
#include "nn/losses.hpp"
#include "nn/network.hpp"
#include "oracles.hpp"
#include "taskgen.hpp"
#include "trainer.hpp"

using namespace autoasm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr int kOraclePrograms = 10'000;
constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradMinSamples = 1000;
constexpr int kLogitVectors = 100;
constexpr int kReweightDraws = 100'000;
constexpr double kReweightSigmas = 3.0;
constexpr int kBookkeepingSimulations = 500;
constexpr int kDepthOneTasks = 100;
constexpr int kDepthOneRequired = 99;
constexpr double kImitationAccuracy = 0.80;
constexpr std::size_t kLearningPool = 5000;
constexpr std::size_t kLearningHeldOut = 200;
constexpr int kLearningSimulations = 200;
constexpr double kBenchMinutes = 20.0;

struct Options {
  std::uint64_t seed = 2019;
  int jobs = 1;
  std::string work;
  std::string cli;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Shared helpers.

oracle::Cells cells(const MachineState& s) {
  oracle::Cells c{};
  for (int r = 0; r < 4; ++r) c[static_cast<std::size_t>(r)] = s.regs[static_cast<std::size_t>(r)];
  if (s.ram)
    for (int m = 0; m < 4; ++m) c[static_cast<std::size_t>(4 + m)] = (*s.ram)[static_cast<std::size_t>(m)];
  return c;
}

std::vector<std::string> lines_of(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l, sep);)
    if (l.find_first_not_of(" \t") != std::string::npos) out.push_back(l);
  return out;
}

/// Re-executes a program text with the oracle interpreter on every pair.
bool oracle_solves(const Task& task, const std::string& program_text) {
  const auto lines = lines_of(program_text, ';');
  for (const auto& p : task.pairs)
    if (oracle::run(cells(p.input), lines) != cells(p.output)) return false;
  return true;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Conservation {
  bool ok = true;
  std::size_t nodes = 0;
};

void conservation(const SearchNode& n, Conservation& c) {
  ++c.nodes;
  std::int64_t child = 0;
  for (const auto& ch : n.children) {
    child += ch->visits;
    conservation(*ch, c);
  }
  if (n.visits != child + n.evaluations) c.ok = false;
  if (n.visits > 0 && (n.mean_reward() < 0.0 || n.mean_reward() > 1.0)) c.ok = false;
  if (n.visits == 0 && n.reward != 0.0) c.ok = false;
}

// ---------------------------------------------------------------------------
// 1. Simulator fidelity.

Outcome simulator_fidelity(const Options&) {
  struct Fixture {
    const char* name;
    const char* program;
    MachineState in, out;
  };
  using S = MachineState;
  const std::vector<Fixture> fixtures = {
      {"algebra", "imull %eax, %ecx\naddl $2, %ecx", S::with_regs({5, 1, 7, 8}), S::with_regs({5, 1, 37, 8})},
      {"algebra", "imull %eax, %ecx\naddl $2, %ecx", S::with_regs({4, 3, 7, 0}), S::with_regs({4, 3, 30, 0})},
      {"map", "addl $1, %ebx\naddl $1, %edx\naddl $1, %eax\naddl $2, %ecx\nsubl $0, %ecx\nsubl $1, %ecx", S::with_regs({8, 1, 0, 7}),
       S::with_regs({9, 2, 1, 8})},
      {"map", "addl $1, %ebx\naddl $1, %edx\naddl $1, %eax\naddl $2, %ecx\nsubl $0, %ecx\nsubl $1, %ecx", S::with_regs({2, 4, 5, 7}),
       S::with_regs({3, 5, 6, 8})},
      {"sort", "addl $4, %ebx\nsubl $4, %eax", S::with_regs({5, 1, 7, 8}),
       S::with_regs({1, 5, 7, 8})},
      {"load/store", "movl -8(%rbp), %ebx\nsubl $3, %ebx\nmovl %ebx, -4(%rbp)", S::with_ram({0, 0, 0, 0}, {2, 8, 0, 1}),
       S::with_ram({0, -3, 0, 0}, {2, -3, 0, 1})},
      {"load/store", "movl -8(%rbp), %ebx\nsubl $3, %ebx\nmovl %ebx, -4(%rbp)", S::with_ram({0, 0, 0, 0}, {6, 5, 4, 9}),
       S::with_ram({0, 1, 0, 0}, {6, 1, 4, 9})},
  };
  int ok = 0;
  std::string bad;
  for (const auto& f : fixtures) {
    const MachineState got = run(f.in, parse_program(f.program));
    if (got == f.out) ++ok;
    else bad += std::string(" ") + f.name;
  }
  return {ok == static_cast<int>(fixtures.size()),
          fmt("%d/%zu fixture pairs reproduced exactly%s", ok, fixtures.size(), bad.empty() ? "" : (" ; wrong:" + bad).c_str())};
}

// 2. Oracle equivalence.

Outcome oracle_equivalence(const Options& o) {
  const SpaceConfig space{4, true};
  const ActionSpace actions(space);
  Rng rng(o.seed, {2});
  auto value = [&]() -> std::int32_t {
    switch (rng.below(4)) {
      case 0: return static_cast<std::int32_t>(rng.between(-9, 9));
      case 1: return static_cast<std::int32_t>(rng.between(-100000, 100000));
      case 2: return static_cast<std::int32_t>(rng.between(INT32_MIN, INT32_MAX));
      default: return rng.below(2) ? INT32_MAX - static_cast<std::int32_t>(rng.below(10))
                                   : INT32_MIN + static_cast<std::int32_t>(rng.below(10));
    }
  };
  int agree = 0;
  std::string first_bad;
  for (int i = 0; i < kOraclePrograms; ++i) {
    Program prog;
    const int len = 1 + static_cast<int>(rng.below(5));
    for (int l = 0; l < len; ++l) prog.push_back(actions[rng.below(actions.size())]);
    std::array<std::int32_t, 4> regs{}, ram{};
    for (auto& v : regs) v = value();
    for (auto& v : ram) v = value();
    const MachineState in = MachineState::with_ram(regs, ram);
    const MachineState got = run(in, prog);
    std::vector<std::string> text;
    for (const auto& ins : prog) text.push_back(format_instruction(ins));
    if (cells(got) == oracle::run(cells(in), text)) ++agree;
    else if (first_bad.empty()) first_bad = format_program(prog, "; ");
  }
  return {agree == kOraclePrograms, fmt("%d/%d random programs (1-5 lines, 4 registers, RAM) agree%s", agree,
                                        kOraclePrograms, first_bad.empty() ? "" : ("; first mismatch: " + first_bad).c_str())};
}

// 3. Gradient correctness.

Outcome gradient_correctness(const Options& o) {
  nn::NetConfig c;
  c.d_emb = 4;
  c.hidden = 8;
  c.pairs = 2;
  c.space = SpaceConfig{2, true};
  Rng rng(o.seed, {3});
  const ActionSpace actions(c.space);
  auto enc = [&] {
    nn::StateEncoding e;
    for (int i = 0; i < c.tokens(); ++i) e.ids.push_back(nn::value_token(static_cast<std::int32_t>(rng.between(-20, 40))));
    return e;
  };
  nn::PolicyNet policy = nn::PolicyNet::create(c, derive_seed(o.seed, {3, 1}));
  nn::ValueNet value = nn::ValueNet::create(c, derive_seed(o.seed, {3, 2}));
  value.params.visit([&](nn::Tensor& t) {
    for (double& x : t.data) x += 0.3 * (rng.uniform() - 0.5);
  });

  std::vector<nn::ImitationExample> im;
  for (int i = 0; i < 3; ++i) im.push_back({enc(), actions[rng.below(actions.size())]});
  std::vector<nn::Trajectory> trajs(3);
  for (auto& t : trajs) {
    for (int s = 0; s < 3; ++s) {
      t.states.push_back(enc());
      t.actions.push_back(actions[rng.below(actions.size())]);
    }
    t.returns = {0.81, 0.9, 1.0};
  }
  trajs[2].returns = {0.0, 0.0, 0.0};
  std::vector<nn::ValueExample> vb{{enc(), 0.9}, {enc(), 0.2}, {enc(), 1.0}, {enc(), 0.0}};

  const int per_tensor = 12;
  struct Row {
    const char* name;
    gradcheck::Result r;
  };
  std::vector<Row> rows = {
      {"imitation", gradcheck::check<nn::PolicyParams>(
                        policy, [&](const nn::PolicyNet& n) { return nn::loss_imitation(n, im); }, per_tensor, rng)},
      {"policy-gradient", gradcheck::check<nn::PolicyParams>(
                              policy, [&](const nn::PolicyNet& n) { return nn::loss_policy_gradient(n, trajs); },
                              per_tensor, rng)},
      {"hybrid", gradcheck::check<nn::PolicyParams>(
                     policy, [&](const nn::PolicyNet& n) { return nn::loss_hybrid(n, trajs, im, 0.37); }, per_tensor,
                     rng)},
      {"value", gradcheck::check<nn::ValueParams>(
                    value, [&](const nn::ValueNet& n) { return nn::loss_value(n, vb); }, per_tensor * 2, rng)},
  };
  double worst = 0.0;
  std::size_t samples = 0;
  std::string detail;
  for (const auto& r : rows) {
    worst = std::max(worst, r.r.worst);
    samples += r.r.samples;
    detail += fmt("%s %.2e (%zu) ", r.name, r.r.worst, r.r.samples);
  }
  return {worst < kGradTolerance && samples >= kGradMinSamples,
          fmt("max rel. error %.2e over %zu parameters (tol %.0e, need >= %zu): ", worst, samples, kGradTolerance,
              kGradMinSamples) +
              detail};
}

// 4. Temperature property.

Outcome temperature_property(const Options& o) {
  Rng rng(o.seed, {4});
  int ok = 0;
  for (int i = 0; i < kLogitVectors; ++i) {
    nn::Logits logits{};
    nn::TokenMask mask{};
    for (std::size_t t = 0; t < logits.size(); ++t) {
      logits[t] = 6.0 * rng.uniform() - 3.0;
      mask[t] = i % 2 == 0 || rng.uniform() < 0.6;
    }
    mask[rng.below(mask.size())] = true;
    mask[rng.below(mask.size())] = true;
    double h[3];
    std::size_t arg[3];
    const double taus[3] = {0.5, 1.0, 2.0};
    for (int k = 0; k < 3; ++k) {
      const auto p = nn::masked_softmax(logits, mask, taus[k]);
      h[k] = nn::entropy(p);
      arg[k] = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    if (h[0] < h[1] && h[1] < h[2] && arg[0] == arg[1] && arg[1] == arg[2]) ++ok;
  }
  return {ok == kLogitVectors,
          fmt("%d/%d logit vectors: entropy strictly increasing over tau {0.5, 1, 2}, argmax fixed", ok, kLogitVectors)};
}

// 5. Task re-weighting.

Outcome reweighting(const Options& o) {
  PilotConfig pc;
  pc.program_length = 1;
  Rng build(o.seed, {5, 1});
  TaskPool pool = build_pool(10, pc, build);
  const std::int64_t id = pool.tasks[3].id;
  for (int i = 0; i < 5; ++i) update_weight(pool, id, false);
  bool others = true;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (i != 3 && pool.weights[i] != 0.0) others = false;
  const double p = sampling_probabilities(pool.weights)[3];
  const double expected = std::exp(5.0) / (std::exp(5.0) + 9.0);
  Rng draw(o.seed, {5, 2});
  const auto batch = sample_batch(pool, kReweightDraws, draw);
  const double freq =
      static_cast<double>(std::count(batch.begin(), batch.end(), std::size_t{3})) / static_cast<double>(kReweightDraws);
  const double sigma = std::sqrt(expected * (1.0 - expected) / kReweightDraws);
  const bool pass = others && pool.weights[3] == 5.0 && p > 0.5 && std::abs(p - expected) < 1e-12 &&
                    std::abs(freq - expected) <= kReweightSigmas * sigma;
  return {pass, fmt("weight %.1f, p %.4f (expected %.4f), frequency %.4f over %d draws, |diff| %.1f sigma", pool.weights[3],
                    p, expected, freq, kReweightDraws, std::abs(freq - expected) / sigma)};
}

// 6. MCTS bookkeeping.

Outcome mcts_bookkeeping(const Options& o) {
  struct Setup {
    const char* name;
    SpaceConfig space;
    bool network;
    int width;
  };
  const std::vector<Setup> setups = {{"uniform/heuristic 4 regs", {4, false}, false, 8},
                                     {"uniform/heuristic RAM full width", {4, true}, false, 456},
                                     {"network 2 regs", {2, false}, true, 8},
                                     {"network RAM", {3, true}, true, 16}};
  std::string detail;
  bool all = true;
  for (std::size_t s = 0; s < setups.size(); ++s) {
    const Setup& st = setups[s];
    PilotConfig pc;
    pc.program_length = 3;
    pc.num_registers = st.space.num_registers;
    pc.ram_enabled = st.space.ram_enabled;
    Rng build(o.seed, {6, s});
    const Task task = build_pool(1, pc, build).tasks[0];
    std::vector<MachineState> in, out;
    for (const auto& p : task.pairs) {
      in.push_back(p.input);
      out.push_back(p.output);
    }
    nn::NetConfig nc;
    nc.d_emb = 8;
    nc.hidden = 16;
    nc.pairs = 2;
    nc.space = st.space;
    const nn::PolicyNet pnet = nn::PolicyNet::create(nc, derive_seed(o.seed, {6, s, 1}));
    const nn::ValueNet vnet = nn::ValueNet::create(nc, derive_seed(o.seed, {6, s, 2}));
    UniformPolicy uniform(st.space);
    NetworkPolicy npol(pnet);
    DistanceHeuristic heuristic;
    NetworkValue nval(vnet);
    SearchConfig sc;
    sc.simulations_per_move = kBookkeepingSimulations;
    sc.expansion_width = st.width;
    sc.seed = derive_seed(o.seed, {6, s, 3});
    Mcts m(in, out, st.network ? static_cast<const SearchPolicy&>(npol) : uniform,
           st.network ? static_cast<const StateEvaluator&>(nval) : heuristic, sc);
    m.search_step();
    Conservation c;
    conservation(m.root(), c);
    const bool ok = m.root().visits == kBookkeepingSimulations && c.ok;
    all = all && ok;
    detail += fmt("[%s: N=%lld, %zu nodes, %s] ", st.name, static_cast<long long>(m.root().visits), c.nodes,
                  c.ok ? "conserved" : "VIOLATED");
  }
  return {all, detail};
}

// 7. Depth-1 completeness.

Outcome depth_one(const Options& o) {
  const SpaceConfig space{4, false};
  const ActionSpace actions(space);
  PilotConfig pc;
  pc.program_length = 1;
  Rng build(o.seed, {7});
  const TaskPool pool = build_pool(kDepthOneTasks, pc, build);
  UniformPolicy uniform(space);
  DistanceHeuristic heuristic;
  int solved = 0, reachable = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Task& t = pool.tasks[i];
    std::set<int> winners;
    for (std::size_t a = 0; a < actions.size(); ++a)
      if (t.solved_by(Program{actions[a]})) winners.insert(static_cast<int>(a));
    if (!winners.empty()) ++reachable;
    std::vector<MachineState> in, out;
    for (const auto& p : t.pairs) {
      in.push_back(p.input);
      out.push_back(p.output);
    }
    SearchConfig sc;
    sc.simulations_per_move = 500;
    sc.expansion_width = static_cast<int>(actions.size());
    sc.max_depth = 1;
    sc.seed = derive_seed(o.seed, {7, i});
    Mcts m(in, out, uniform, heuristic, sc);
    const SearchNode& pick = m.search_step();
    if (pick.solved && winners.count(pick.action_index)) ++solved;
  }
  return {solved >= kDepthOneRequired && reachable == kDepthOneTasks,
          fmt("%d/%d one-line tasks solved (need >= %d); brute force over %zu actions finds a solution for %d", solved,
              kDepthOneTasks, kDepthOneRequired, actions.size(), reachable)};
}

// 8. Desk-scale learning.

Outcome desk_learning(const Options& o) {
  PilotConfig pc;
  pc.program_length = 2;
  pc.num_registers = 2;
  pc.pairs_per_task = 2;
  Rng build(o.seed, {8, 1});
  TaskPool pool = build_pool(kLearningPool, pc, build);

  // Held-out tasks: fresh draws whose pairs do not occur in the training pool.
  std::multimap<std::uint64_t, std::size_t> seen;
  for (std::size_t i = 0; i < pool.size(); ++i) seen.emplace(pair_multiset_hash(pool.tasks[i]), i);
  std::vector<Task> held;
  Rng fresh(o.seed, {8, 2});
  const TaskPool extra = build_pool(kLearningHeldOut * 3, pc, fresh);
  for (const Task& t : extra.tasks) {
    const auto [a, b] = seen.equal_range(pair_multiset_hash(t));
    bool dup = false;
    for (auto it = a; it != b; ++it) dup = dup || same_pair_multiset(t, pool.tasks[it->second]);
    if (!dup && held.size() < kLearningHeldOut) held.push_back(t);
  }

  TrainConfig tc;
  tc.seed = o.seed;
  tc.jobs = o.jobs;
  tc.d_emb = 16;
  tc.hidden = 128;
  tc.pretrain_epochs = 40;
  tc.pretrain_batch = 32;
  tc.pretrain_lr = 1e-3;
  tc.pretrain_augment = true;
  tc.policy_lr = 1e-4;
  tc.epochs = 150;
  tc.batch_size = 64;
  tc.plateau_window = 1000;
  const nn::NetConfig net = net_config_for(pc, tc);

  auto t0 = std::chrono::steady_clock::now();
  nn::PolicyNet policy = nn::PolicyNet::create(net, derive_seed(o.seed, {8, 3}));
  const ImitationReport rep = pretrain_imitation(policy, pool, tc);
  const nn::PolicyNet imitation = policy;
  const double pre_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << fmt("  [8] pretraining done in %.0f s, next-line accuracy %.3f\n", pre_s, rep.holdout_next_line_accuracy);

  t0 = std::chrono::steady_clock::now();
  Learner learner(std::move(policy), nn::ValueNet::create(net, derive_seed(o.seed, {8, 4})), tc);
  double last_success = 0.0;
  for (int e = 0; e < tc.epochs; ++e) {
    last_success = train_epoch(learner, pool, tc, e).success_rate;
    if (e % 25 == 24) std::cerr << fmt("  [8] RL epoch %d, success %.3f\n", e + 1, last_success);
  }
  const double rl_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // AutoAssemblet on the held-out tasks.
  t0 = std::chrono::steady_clock::now();
  NetworkPolicy guide(learner.policy);
  NetworkValue value(learner.value);
  int aa_solved = 0;
  std::int64_t aa_lines = 0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    SearchConfig sc;
    sc.simulations_per_move = kLearningSimulations;
    sc.seed = derive_seed(o.seed, {8, 5, i});
    const auto r = synthesize(held[i], guide, value, sc);
    aa_lines += r.lines_executed;
    if (r.program && oracle_solves(held[i], format_program(*r.program, "; "))) ++aa_solved;
  }
  const double aa_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << fmt("  [8] search solved %d/%zu in %.0f s\n", aa_solved, held.size(), aa_s);
  const std::int64_t budget = aa_lines / static_cast<std::int64_t>(held.size());

  // Imitation-only decoding: greedy first, then tau = 1 samples, with the same
  // per-task simulator line budget.
  int im_solved = 0, greedy_solved = 0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    Rng rng(o.seed, {8, 6, i});
    const auto r = sample_programs(imitation, held[i], 1 << 30, 12, rng, budget);
    if (r.program && oracle_solves(held[i], format_program(*r.program, "; "))) ++im_solved;
    Rng g(o.seed, {8, 7, i});
    const auto gr = sample_programs(imitation, held[i], 1, 12, g);
    if (gr.program && oracle_solves(held[i], format_program(*gr.program, "; "))) ++greedy_solved;
  }

  const bool a = rep.holdout_next_line_accuracy >= kImitationAccuracy;
  const bool b = aa_solved > im_solved;
  const double n = static_cast<double>(held.size());
  return {a && b,
          fmt("(a) hold-out next-line accuracy %.3f (need >= %.2f; exact %.3f, %zu examples) %s; ", rep.holdout_next_line_accuracy,
              kImitationAccuracy, rep.holdout_exact_accuracy, rep.holdout_examples, a ? "ok" : "FAIL") +
              fmt("(b) on %zu held-out tasks AutoAssemblet %.1f%% vs imitation %.1f%% at %lld simulator lines/task "
                  "(greedy only %.1f%%) %s; ",
                  held.size(), 100.0 * aa_solved / n, 100.0 * im_solved / n, static_cast<long long>(budget),
                  100.0 * greedy_solved / n, b ? "ok" : "FAIL") +
              fmt("pretrain %.0f s, RL %.0f s (last epoch success %.2f), search %.0f s", pre_s, rl_s, last_success, aa_s)};
}

// 9. Benchmark harness through the command line tool.

int shell(const std::string& cmd, const std::string& log) {
  const int rc = std::system((cmd + " >>" + log + " 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

Outcome bench_harness(const Options& o) {
  const fs::path dir = fs::path(o.work) / "bench";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string log = (dir / "log.txt").string();
  const std::string seed = std::to_string(o.seed), jobs = std::to_string(o.jobs);
  const std::string q = "'" + o.cli + "'";
  const fs::path suite = dir / "suite.jsonl", pool = dir / "pool.jsonl", run = dir / "run", out = dir / "report";
  {
    std::ofstream cfg(dir / "train.json");
    cfg << nlohmann::json{{"pretrain_epochs", 15}, {"pretrain_augment", true}, {"policy_lr", 1e-4}, {"epochs", 30}, {"batch_size", 64}, {"hidden", 128}, {"d_emb", 16}}
               .dump();
  }
  if (shell(q + " write-suite --seed 2019 --out '" + suite.string() + "'", log) != 0 ||
      shell(q + " gen-pool --n 3000 --lines 3 --regs 4 --seed " + seed + " --out '" + pool.string() + "'", log) != 0 ||
      shell(q + " train --pool '" + pool.string() + "' --out '" + run.string() + "' --config '" +
                (dir / "train.json").string() + "' --seed " + seed + " --jobs " + jobs,
            log) != 0)
    return {false, "setup through the CLI failed; see " + log};

  const auto t0 = std::chrono::steady_clock::now();
  const int rc = shell(q + " bench --baselines imitation,reinforce,mcts_prior,autoassemblet --imitation-policy '" +
                           (run / "policy_imitation.ckpt").string() + "' --reinforce-policy '" +
                           (run / "policy.ckpt").string() + "' --policy '" + (run / "policy.ckpt").string() +
                           "' --value '" + (run / "value.ckpt").string() + "' --suite '" + suite.string() +
                           "' --seed " + seed + " --jobs " + jobs + " --out '" + out.string() + "'",
                       log);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  if (rc != 0) return {false, fmt("bench exited with %d; see ", rc) + log};

  // Report schema: the Table-1 columns first, extra columns allowed after them.
  auto fields = [](const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    return f;
  };
  std::ifstream csv(out / "report.csv");
  std::string header_line;
  std::getline(csv, header_line);
  const auto header = fields(header_line);
  const std::vector<std::string> required = {"category", "baseline", "success_rate", "ave_steps", "tasks", "budget"};
  bool schema = header.size() >= required.size() && std::equal(required.begin(), required.end(), header.begin());
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> rows;  // rate, tasks
  std::map<std::pair<std::string, std::string>, std::size_t> solved_col;
  const auto solved_at = std::find(header.begin(), header.end(), "solved");
  for (std::string line; std::getline(csv, line);) {
    const auto f = fields(line);
    if (f.size() != header.size() || !schema) {
      schema = false;
      continue;
    }
    if (f[3] != "\xe2\x80\x94" && f[3].find_first_not_of("0123456789.") != std::string::npos) schema = false;
    rows[{f[1], f[0]}] = {std::stod(f[2]), std::stoul(f[4])};
    if (solved_at != header.end()) solved_col[{f[1], f[0]}] = std::stoul(f[static_cast<std::size_t>(solved_at - header.begin())]);
  }
  const std::vector<std::string> baselines = {"imitation", "reinforce", "mcts_prior", "autoassemblet"};
  const std::vector<std::string> cats = {"easy", "medium", "hard", "total"};
  const std::map<std::string, std::size_t> sizes = {{"easy", 50}, {"medium", 40}, {"hard", 40}, {"total", 130}};
  schema = schema && rows.size() == baselines.size() * cats.size();
  for (const auto& b : baselines)
    for (const auto& c : cats) schema = schema && rows.count({b, c}) && rows[{b, c}].second == sizes.at(c);
  std::ifstream txt(out / "report.txt");
  const std::string text((std::istreambuf_iterator<char>(txt)), std::istreambuf_iterator<char>());

  // Soundness: every reported success re-executes to the targets.
  const auto tasks = load_suite(suite.string());
  std::map<std::string, const Task*> by_name;
  for (const auto& t : tasks) by_name[t.name] = &t.task;
  std::ifstream rec(out / "outcomes.jsonl");
  std::size_t records = 0, successes = 0, sound = 0;
  std::map<std::pair<std::string, std::string>, std::size_t> solved;
  for (std::string line; std::getline(rec, line);) {
    const auto j = nlohmann::json::parse(line);
    ++records;
    if (!j["solved"].get<bool>()) continue;
    ++successes;
    const std::string b = j["baseline"], c = j["category"];
    ++solved[{b, c}];
    ++solved[{b, "total"}];
    if (oracle_solves(*by_name.at(j["task"].get<std::string>()), j["program"].get<std::string>())) ++sound;
  }
  bool consistent = true;
  for (const auto& b : baselines)
    for (const auto& c : cats) {
      const double expect = 100.0 * static_cast<double>(solved[{b, c}]) / static_cast<double>(sizes.at(c));
      // Rates are printed with two decimals.
      consistent = consistent && std::abs(rows[{b, c}].first - expect) <= 0.005 + 1e-9;
      if (solved_at != header.end()) consistent = consistent && solved_col[{b, c}] == solved[{b, c}];
    }

  std::string summary;
  for (const auto& b : baselines)
    summary += fmt("%s %.1f/%.1f/%.1f/%.1f; ", b.c_str(), rows[{b, "easy"}].first, rows[{b, "medium"}].first,
                   rows[{b, "hard"}].first, rows[{b, "total"}].first);
  const bool pass = schema && consistent && records == 4 * tasks.size() && successes == sound &&
                    text.find("success rate") != std::string::npos && text.find("ave steps") != std::string::npos &&
                    minutes < kBenchMinutes;
  return {pass, fmt("schema %s, %zu/%zu successes re-execute (oracle), rates %s, bench %.1f min (limit %.0f); success %% "
                    "easy/medium/hard/total: ",
                    schema ? "ok" : "BAD", sound, successes, consistent ? "match outcomes" : "DIFFER", minutes,
                    kBenchMinutes) +
                    summary};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Options o;
  std::vector<int> only;
  o.work = (fs::temp_directory_path() / "autoasm_acceptance").string();
#ifdef AUTOASM_CLI_PATH
  o.cli = AUTOASM_CLI_PATH;
#endif
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
  app.add_option("--seed", o.seed, "Root seed");
  app.add_option("--jobs", o.jobs, "Worker threads for training and benchmarks")->check(CLI::PositiveNumber);
  app.add_option("--work", o.work, "Scratch directory");
  app.add_option("--cli", o.cli, "Path to the autoasm command line tool");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(o.work);

  const std::vector<std::pair<const char*, std::function<Outcome(const Options&)>>> criteria = {
      {"simulator fidelity", simulator_fidelity},
      {"oracle equivalence", oracle_equivalence},
      {"gradient correctness", gradient_correctness},
      {"temperature property", temperature_property},
      {"task re-weighting", reweighting},
      {"MCTS bookkeeping", mcts_bookkeeping},
      {"depth-1 completeness", depth_one},
      {"desk-scale learning", desk_learning},
      {"benchmark harness", bench_harness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second(o);
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += r.pass ? 0 : 1;
    std::cout << (r.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << " (" << fmt("%.2f", s)
              << " s): " << r.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

#include "bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "error.hpp"

namespace autoasm {

using nlohmann::json;

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Easy: return "easy";
    case Category::Medium: return "medium";
    case Category::Hard: return "hard";
  }
  return "?";
}

Category parse_category(std::string_view name) {
  if (name == "easy") return Category::Easy;
  if (name == "medium") return Category::Medium;
  if (name == "hard") return Category::Hard;
  fail(ErrorCode::InvalidArgument, "unknown category '" + std::string(name) + "'");
}

std::string_view baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Imitation: return "imitation";
    case BaselineKind::Reinforce: return "reinforce";
    case BaselineKind::MctsPrior: return "mcts_prior";
    case BaselineKind::AutoAssemblet: return "autoassemblet";
  }
  return "?";
}

BaselineKind parse_baseline(std::string_view name) {
  for (auto k : {BaselineKind::Imitation, BaselineKind::Reinforce, BaselineKind::MctsPrior, BaselineKind::AutoAssemblet})
    if (baseline_name(k) == name) return k;
  fail(ErrorCode::InvalidArgument, "unknown baseline '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Suite construction.

namespace {

using Regs = std::array<std::int32_t, kNumRegisters>;

Instruction ins(Opcode op, Operand src, Operand dst) { return Instruction{op, src, dst}; }
Operand R(int r) { return Operand::reg(static_cast<Register>(r)); }

Regs random_regs(Rng& rng, int lo = 0, int hi = 9) {
  Regs r;
  for (auto& v : r) v = static_cast<std::int32_t>(rng.between(lo, hi));
  return r;
}

/// out[i] = in[src[i]] for every register, realized with movl and one
/// scratch register that holds `z` on entry and is restored afterwards.
Program assignment_witness(std::array<int, kNumRegisters> src, int scratch, int z) {
  Program prog;
  std::vector<int> pending;
  for (int i = 0; i < kNumRegisters; ++i)
    if (i != scratch && src[i] != i) pending.push_back(i);
  bool used_scratch = false;
  while (!pending.empty()) {
    bool progressed = false;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const int dst = pending[k];
      const bool read_later = std::any_of(pending.begin(), pending.end(),
                                          [&](int other) { return other != dst && src[other] == dst; });
      if (read_later) continue;
      prog.push_back(ins(Opcode::Movl, R(src[dst]), R(dst)));
      pending.erase(pending.begin() + static_cast<long>(k));
      progressed = true;
      break;
    }
    if (progressed) continue;
    // Every pending destination is still read: break a cycle via scratch.
    const int victim = pending.front();
    prog.push_back(ins(Opcode::Movl, R(victim), R(scratch)));
    used_scratch = true;
    for (int d : pending)
      if (src[d] == victim) src[d] = scratch;
  }
  if (used_scratch) prog.push_back(ins(Opcode::Movl, Operand::imm(z), R(scratch)));
  return prog;
}

Program add_constant(int reg, int n, Opcode op) {
  Program prog;
  while (n > 0) {
    const int d = std::min(n, 9);
    prog.push_back(ins(op, Operand::imm(d), R(reg)));
    n -= d;
  }
  return prog;
}

struct Builder {
  std::vector<BenchTask> tasks;

  /// Accepts the task only when the witness reproduces every target and no
  /// pair is left unchanged.
  bool add(std::string name, Category cat, const std::vector<Regs>& inputs, const std::vector<Regs>& outputs,
           Program witness) {
    Task t;
    t.id = static_cast<std::int64_t>(tasks.size());
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      IoPair p{MachineState::with_regs(inputs[k]), MachineState::with_regs(outputs[k])};
      if (p.input == p.output) return false;
      t.pairs.push_back(p);
    }
    if (witness.size() > 12 || !t.solved_by(witness))
      fail(ErrorCode::InvalidArgument, "witness for '" + name + "' does not reproduce its targets");
    t.gold = witness;
    tasks.push_back({std::move(name), cat, std::move(t), std::move(witness)});
    return true;
  }
};

std::string numbered(const std::string& family, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%02d", family.c_str(), i);
  return buf;
}

std::pair<int, int> two_registers(Rng& rng) {
  const int a = static_cast<int>(rng.below(4));
  int b = static_cast<int>(rng.below(3));
  if (b >= a) ++b;
  return {a, b};
}

void build_easy(Builder& b, Rng& rng) {
  // The first task is the worked "add registers" example.
  b.add("add-registers-00", Category::Easy, {{5, 1, 7, 8}, {4, 3, 7, 0}}, {{6, 1, 7, 8}, {7, 3, 7, 0}},
        {ins(Opcode::Addl, R(1), R(0))});
  struct Family {
    const char* name;
    Opcode op;
  };
  const Family arith[] = {{"add-registers", Opcode::Addl}, {"sub-registers", Opcode::Subl},
                          {"mul-registers", Opcode::Imull}};
  for (const auto& fam : arith) {
    for (int i = (fam.op == Opcode::Addl ? 1 : 0); i < 10;) {
      const auto [dst, src] = two_registers(rng);
      std::vector<Regs> in{random_regs(rng), random_regs(rng)}, out = in;
      const Instruction w = ins(fam.op, R(src), R(dst));
      for (std::size_t k = 0; k < in.size(); ++k) out[k] = step(MachineState::with_regs(in[k]), w).regs;
      if (b.add(numbered(fam.name, i), Category::Easy, in, out, {w})) ++i;
    }
  }
  // dst <- min(dst, src) / max(dst, src); inputs chosen so the same operand
  // wins on both pairs.
  for (int want_min = 1; want_min >= 0; --want_min) {
    for (int i = 0; i < 10;) {
      const auto [dst, src] = two_registers(rng);
      std::vector<Regs> in{random_regs(rng), random_regs(rng)}, out = in;
      bool ok = true;
      for (std::size_t k = 0; k < in.size(); ++k) {
        const bool src_wins = want_min ? in[k][src] < in[k][dst] : in[k][src] > in[k][dst];
        ok = ok && src_wins;
        out[k][dst] = want_min ? std::min(in[k][dst], in[k][src]) : std::max(in[k][dst], in[k][src]);
      }
      if (!ok) continue;
      if (b.add(numbered(want_min ? "min" : "max", i), Category::Easy, in, out, {ins(Opcode::Movl, R(src), R(dst))}))
        ++i;
    }
  }
}

void build_medium(Builder& b, Rng& rng) {
  // The first task is the worked algebra example; its printed pairs come
  // from imull + addl rather than a plain +30.
  b.add("algebra-00", Category::Medium, {{5, 1, 7, 8}, {4, 3, 7, 0}}, {{5, 1, 37, 8}, {4, 3, 30, 0}},
        {ins(Opcode::Imull, R(0), R(2)), ins(Opcode::Addl, Operand::imm(2), R(2))});
  auto constant_task = [&](const char* family, Opcode op, int first, int count, int regs) {
    for (int i = first; i < count;) {
      const int n = static_cast<int>(rng.between(11, 40 / regs));
      std::vector<int> targets;
      while (static_cast<int>(targets.size()) < regs) {
        const int r = static_cast<int>(rng.below(4));
        if (std::find(targets.begin(), targets.end(), r) == targets.end()) targets.push_back(r);
      }
      std::sort(targets.begin(), targets.end());
      std::vector<Regs> in{random_regs(rng), random_regs(rng)}, out = in;
      Program w;
      for (int r : targets) {
        for (auto& o : out) o[r] += op == Opcode::Addl ? n : -n;
        const auto part = add_constant(r, n, op);
        w.insert(w.end(), part.begin(), part.end());
      }
      if (b.add(numbered(family, i) + "-n" + std::to_string(n), Category::Medium, in, out, w)) ++i;
    }
  };
  constant_task("add-constant", Opcode::Addl, 0, 13, 1);
  constant_task("sub-constant", Opcode::Subl, 0, 13, 1);
  constant_task("add-constant-two-registers", Opcode::Addl, 0, 13, 2);
}

void build_hard(Builder& b, Rng& rng) {
  // filter: values < 3 become -1, same positions on both pairs.
  for (int i = 0; i < 10;) {
    std::vector<Regs> in{random_regs(rng), random_regs(rng)}, out = in;
    std::array<bool, 4> low{};
    bool consistent = true;
    for (int r = 0; r < 4; ++r) {
      low[r] = in[0][r] < 3;
      consistent = consistent && (in[1][r] < 3) == low[r];
    }
    if (!consistent || std::none_of(low.begin(), low.end(), [](bool x) { return x; })) continue;
    Program w;
    for (int r = 0; r < 4; ++r) {
      if (!low[r]) continue;
      for (auto& o : out) o[r] = -1;
      w.push_back(ins(Opcode::Movl, Operand::imm(0), R(r)));
      w.push_back(ins(Opcode::Subl, Operand::imm(1), R(r)));
    }
    if (b.add(numbered("filter", i), Category::Hard, in, out, w)) ++i;
  }

  auto distinct = [&](int n) {
    std::vector<std::int32_t> pool(10);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(n));
    return pool;
  };

  // sort eax, ebx, ecx ascending; edx is scratch holding the same z on both pairs.
  for (int i = 0; i < 10;) {
    std::array<int, 3> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    if (perm == std::array<int, 3>{0, 1, 2}) continue;
    const int z = static_cast<int>(rng.below(10));
    std::vector<Regs> in(2), out(2);
    for (int k = 0; k < 2; ++k) {
      auto v = distinct(3);
      std::sort(v.begin(), v.end());
      for (int r = 0; r < 3; ++r) {
        in[k][r] = v[perm[r]];
        out[k][r] = v[r];
      }
      in[k][3] = out[k][3] = z;
    }
    std::array<int, 4> src{0, 1, 2, 3};
    for (int r = 0; r < 3; ++r)
      for (int j = 0; j < 3; ++j)
        if (perm[j] == r) src[r] = j;
    if (b.add(numbered("sort", i), Category::Hard, in, out, assignment_witness(src, 3, z))) ++i;
  }

  // switch two registers with a third as scratch.
  for (int i = 0; i < 10;) {
    auto regs = std::array<int, 4>{0, 1, 2, 3};
    std::shuffle(regs.begin(), regs.end(), rng);
    const int a = regs[0], c = regs[1], scratch = regs[2];
    const int z = static_cast<int>(rng.below(10));
    std::vector<Regs> in{random_regs(rng), random_regs(rng)};
    for (auto& r : in) r[scratch] = z;
    if (in[0][a] == in[0][c] || in[1][a] == in[1][c]) continue;
    std::vector<Regs> out = in;
    for (auto& o : out) std::swap(o[a], o[c]);
    std::array<int, 4> src{0, 1, 2, 3};
    src[a] = c;
    src[c] = a;
    if (b.add(numbered("switch-registers", i), Category::Hard, in, out, assignment_witness(src, scratch, z))) ++i;
  }

  // top-2 of eax, ebx, ecx into eax (largest) and ebx (second); ecx keeps its
  // value and edx is scratch.
  for (int i = 0; i < 10;) {
    std::array<int, 3> order{0, 1, 2};  // order[0] holds the largest
    std::shuffle(order.begin(), order.end(), rng);
    const int z = static_cast<int>(rng.below(10));
    std::vector<Regs> in(2), out(2);
    for (int k = 0; k < 2; ++k) {
      auto v = distinct(3);
      std::sort(v.begin(), v.end(), std::greater<>());
      for (int j = 0; j < 3; ++j) in[k][order[j]] = v[j];
      in[k][3] = z;
      out[k] = in[k];
      out[k][0] = v[0];
      out[k][1] = v[1];
    }
    std::array<int, 4> src{order[0], order[1], 2, 3};
    if (b.add(numbered("top-two", i), Category::Hard, in, out, assignment_witness(src, 3, z))) ++i;
  }
}

}  // namespace

std::vector<BenchTask> build_suites(std::uint64_t seed) {
  Builder b;
  Rng easy(seed, {1}), medium(seed, {2}), hard(seed, {3});
  build_easy(b, easy);
  build_medium(b, medium);
  build_hard(b, hard);
  return std::move(b.tasks);
}

// ---------------------------------------------------------------------------
// Suite files: pool-style records plus name, category and witness.

void write_suite(std::ostream& out, const std::vector<BenchTask>& suite) {
  const json header = {{"format", "autoasm-suite"},
                       {"version", 1},
                       {"num_registers", kSuiteSpace.num_registers},
                       {"ram_enabled", kSuiteSpace.ram_enabled},
                       {"pairs_per_task", 2},
                       {"count", suite.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const BenchTask& bt = suite[i];
    json pairs = json::array();
    for (const auto& p : bt.task.pairs) {
      auto cells = cells_of(p.input, kSuiteSpace);
      const auto o = cells_of(p.output, kSuiteSpace);
      cells.insert(cells.end(), o.begin(), o.end());
      pairs.push_back(cells);
    }
    const json rec = {{"id", i},
                      {"K", bt.task.pairs.size()},
                      {"pairs", pairs},
                      {"gold", format_program(bt.witness, "; ")},
                      {"weight", 0.0},
                      {"name", bt.name},
                      {"category", category_name(bt.category)},
                      {"witness", format_program(bt.witness, "; ")}};
    out << rec.dump() << '\n';
  }
}

std::vector<BenchTask> read_suite(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::CorruptFile, "empty suite file");
  std::vector<BenchTask> suite;
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != "autoasm-suite") fail(ErrorCode::CorruptFile, "not a suite file");
    if (header.at("version").get<int>() != 1) fail(ErrorCode::VersionMismatch, "unsupported suite version");
    const auto count = header.at("count").get<std::size_t>();
    const int cells = kSuiteSpace.cells();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      BenchTask bt;
      bt.name = rec.at("name").get<std::string>();
      bt.category = parse_category(rec.at("category").get<std::string>());
      bt.task.id = static_cast<std::int64_t>(suite.size());
      for (const auto& f : rec.at("pairs").get<std::vector<std::vector<std::int32_t>>>()) {
        if (static_cast<int>(f.size()) != 2 * cells) fail(ErrorCode::CorruptFile, "wrong cell count in " + bt.name);
        bt.task.pairs.push_back({state_from_cells({f.begin(), f.begin() + cells}, kSuiteSpace),
                                 state_from_cells({f.begin() + cells, f.end()}, kSuiteSpace)});
      }
      bt.witness = parse_program(rec.at("witness").get<std::string>());
      bt.task.gold = bt.witness;
      if (!bt.task.solved_by(bt.witness)) fail(ErrorCode::CorruptFile, "witness of " + bt.name + " does not execute");
      suite.push_back(std::move(bt));
    }
    if (suite.size() != count) fail(ErrorCode::CorruptFile, "suite is truncated");
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("bad suite record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Syntax || e.code() == ErrorCode::Constraint || e.code() == ErrorCode::InvalidArgument)
      fail(ErrorCode::CorruptFile, e.what());
    throw;
  }
  return suite;
}

void save_suite(const std::string& path, const std::vector<BenchTask>& suite) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_suite(out, suite);
  if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

std::vector<BenchTask> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return read_suite(in);
}

// ---------------------------------------------------------------------------
// Baselines.

TaskOutcome sample_programs(const nn::PolicyNet& policy, const Task& task, int budget, int max_len, Rng& rng,
                            std::int64_t line_budget) {
  TaskOutcome out;
  const auto pairs = static_cast<std::int64_t>(task.pairs.size());
  auto affordable = [&](std::size_t lines) {
    return line_budget <= 0 || out.lines_executed + static_cast<std::int64_t>(lines) * pairs <= line_budget;
  };
  std::vector<MachineState> targets;
  for (const auto& p : task.pairs) targets.push_back(p.output);
  auto solved = [&](const std::vector<MachineState>& s) {
    for (std::size_t k = 0; k < s.size(); ++k)
      if (!state_equals(s[k], targets[k])) return false;
    return true;
  };
  for (int attempt = 0; attempt < budget && affordable(1); ++attempt) {
    std::vector<MachineState> states;
    for (const auto& p : task.pairs) states.push_back(p.input);
    Program prog;
    bool ok = solved(states);
    while (!ok && static_cast<int>(prog.size()) < max_len && affordable(prog.size() + 1)) {
      const auto enc = encode_for_network(states, targets, policy.config.space, policy.config.pairs);
      const auto ctx = nn::encoder_forward(policy.params.enc, policy.config, enc).context();
      const Instruction instr =
          attempt == 0 ? nn::greedy_action(policy, ctx).instr : nn::sample_action(policy, ctx, 1.0, rng).instr;
      prog.push_back(instr);
      for (auto& s : states) s = step(s, instr);
      ok = solved(states);
    }
    out.steps = static_cast<int>(prog.size());
    out.lines_executed += static_cast<std::int64_t>(prog.size() * task.pairs.size());
    if (ok && task.solved_by(prog)) {
      out.program = std::move(prog);
      break;
    }
  }
  return out;
}

namespace {

const nn::PolicyNet& need(const nn::PolicyNet* p, BaselineKind kind, const char* what) {
  if (!p)
    fail(ErrorCode::MissingCheckpoint,
         std::string(baseline_name(kind)) + " baseline needs a " + what + " checkpoint");
  if (!(p->config.space == kSuiteSpace) || p->config.pairs < 1)
    fail(ErrorCode::ConfigMismatch, std::string(what) + " network was not built for 4 registers without RAM");
  return *p;
}

}  // namespace

std::vector<TaskOutcome> run_baseline(BaselineKind kind, const BaselineNets& nets, const std::vector<BenchTask>& suite,
                                      const BenchConfig& config) {
  config.search.validate();
  if (config.sample_budget < 1) fail(ErrorCode::InvalidArgument, "sample budget must be >= 1");
  const nn::PolicyNet* policy = nullptr;
  switch (kind) {
    case BaselineKind::Imitation:
    case BaselineKind::MctsPrior: policy = &need(nets.imitation, kind, "supervised policy"); break;
    case BaselineKind::Reinforce: policy = &need(nets.reinforce, kind, "RL policy"); break;
    case BaselineKind::AutoAssemblet:
      policy = &need(nets.policy, kind, "policy");
      if (!nets.value) fail(ErrorCode::MissingCheckpoint, "autoassemblet baseline needs a value checkpoint");
      if (!(nets.value->config.space == kSuiteSpace))
        fail(ErrorCode::ConfigMismatch, "value network was not built for 4 registers without RAM");
      break;
  }

  std::vector<TaskOutcome> outcomes(suite.size());
  auto run_one = [&](std::size_t i) {
    const Task& task = suite[i].task;
    const std::uint64_t stream = derive_seed(config.seed, {static_cast<std::uint64_t>(kind), i});
    TaskOutcome out;
    if (kind == BaselineKind::Imitation || kind == BaselineKind::Reinforce) {
      Rng rng(stream);
      out = sample_programs(*policy, task, config.sample_budget, config.search.max_depth, rng);
    } else {
      NetworkPolicy guide(*policy);
      DistanceHeuristic heuristic;
      std::optional<NetworkValue> value;
      if (kind == BaselineKind::AutoAssemblet) value.emplace(*nets.value);
      const StateEvaluator& eval =
          kind == BaselineKind::AutoAssemblet ? static_cast<const StateEvaluator&>(*value) : heuristic;
      SearchConfig sc = config.search;
      sc.seed = stream;
      auto r = synthesize(task, guide, eval, sc);
      out.program = std::move(r.program);
      out.steps = r.steps_taken;
      out.lines_executed = r.lines_executed;
    }
    if (out.program && !task.solved_by(*out.program)) out.program.reset();
    out.task = i;
    outcomes[i] = std::move(out);
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(config.jobs, 1)), suite.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < suite.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&, w] {
        for (std::size_t i = w; i < suite.size(); i += workers) run_one(i);
      });
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// Reports.

void add_to_report(BenchReport& report, BaselineKind kind, const std::vector<BenchTask>& suite,
                   const std::vector<TaskOutcome>& outcomes, int budget) {
  if (outcomes.size() != suite.size()) fail(ErrorCode::InvalidArgument, "one outcome per suite task is required");
  const char* cats[] = {"easy", "medium", "hard", "total"};
  for (int c = 0; c < 4; ++c) {
    ReportRow row;
    row.category = cats[c];
    row.baseline = std::string(baseline_name(kind));
    row.budget = budget;
    double solved_len = 0.0, all_len = 0.0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
      if (c < 3 && static_cast<int>(suite[i].category) != c) continue;
      ++row.tasks;
      const auto& o = outcomes[i];
      if (o.success()) {
        ++row.solved;
        solved_len += static_cast<double>(o.program->size());
        all_len += static_cast<double>(o.program->size());
      } else {
        all_len += static_cast<double>(o.steps);
      }
    }
    row.success_rate = row.tasks ? 100.0 * static_cast<double>(row.solved) / static_cast<double>(row.tasks) : 0.0;
    if (row.solved) row.ave_steps = solved_len / static_cast<double>(row.solved);
    if (row.tasks) row.ave_steps_all = all_len / static_cast<double>(row.tasks);
    report.rows.push_back(row);
  }
}

namespace {

std::string fixed(std::optional<double> v, int digits) {
  if (!v) return "—";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << *v;
  return os.str();
}

}  // namespace

std::string BenchReport::csv() const {
  std::ostringstream os;
  os << "category,baseline,success_rate,ave_steps,tasks,budget,solved,ave_steps_all\n";
  for (const auto& r : rows)
    os << r.category << ',' << r.baseline << ',' << fixed(r.success_rate, 2) << ',' << fixed(r.ave_steps, 2) << ','
       << r.tasks << ',' << r.budget << ',' << r.solved << ',' << fixed(r.ave_steps_all, 2) << '\n';
  return os.str();
}

std::string BenchReport::text() const {
  std::ostringstream os;
  os << std::left << std::setw(15) << "baseline" << std::setw(8) << "suite" << std::right << std::setw(8) << "solved"
     << std::setw(14) << "success rate" << std::setw(11) << "ave steps" << std::setw(15) << "ave steps all"
     << std::setw(8) << "budget" << '\n';
  for (const auto& r : rows) {
    const std::string solved = std::to_string(r.solved) + "/" + std::to_string(r.tasks);
    const std::string rate = fixed(r.success_rate, 1) + "%";
    // The dash is three bytes but one column wide.
    const auto pad = [](const std::string& s, int w) {
      const int width = s == "—" ? 1 : static_cast<int>(s.size());
      return std::string(static_cast<std::size_t>(std::max(0, w - width)), ' ') + s;
    };
    os << std::left << std::setw(15) << r.baseline << std::setw(8) << r.category << std::right << std::setw(8)
       << solved << std::setw(14) << rate << pad(fixed(r.ave_steps, 1), 11) << pad(fixed(r.ave_steps_all, 1), 15)
       << std::setw(8) << r.budget << '\n';
  }
  return os.str();
}

}  // namespace autoasm

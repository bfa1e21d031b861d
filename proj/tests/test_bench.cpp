#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "bench.hpp"
#include "error.hpp"

using namespace autoasm;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an autoasm::Error");
  return ErrorCode::InvalidArgument;
}

nn::NetConfig suite_net(int hidden = 8) {
  nn::NetConfig c;
  c.d_emb = 4;
  c.hidden = hidden;
  c.pairs = 2;
  c.space = kSuiteSpace;
  return c;
}

}  // namespace

TEST_CASE("suite shape and witnesses") {
  const auto suite = build_suites();
  REQUIRE(suite.size() == 130);
  std::map<Category, int> counts;
  std::set<std::string> names;
  for (const auto& b : suite) {
    ++counts[b.category];
    names.insert(b.name);
    REQUIRE(b.task.pairs.size() == 2);
    for (const auto& p : b.task.pairs) {
      CHECK(run(p.input, b.witness) == p.output);
      CHECK_FALSE(p.input == p.output);
      CHECK_FALSE(p.input.ram.has_value());
    }
    for (const auto& i : b.witness) CHECK(is_legal(i, kSuiteSpace));
  }
  CHECK(counts[Category::Easy] == 50);
  CHECK(counts[Category::Medium] == 40);
  CHECK(counts[Category::Hard] == 40);
  CHECK(names.size() == 130);
}

TEST_CASE("worked suite examples") {
  const auto suite = build_suites();
  const auto find = [&](const std::string& name) -> const BenchTask& {
    for (const auto& b : suite)
      if (b.name == name) return b;
    FAIL("missing " << name);
    return suite.front();
  };
  const BenchTask& add = find("add-registers-00");
  CHECK(add.task.pairs[0].input == MachineState::with_regs({5, 1, 7, 8}));
  CHECK(add.task.pairs[1].input == MachineState::with_regs({4, 3, 7, 0}));
  CHECK(format_program(add.witness, "; ") == "addl %ebx, %eax");

  const BenchTask& alg = find("algebra-00");
  CHECK(alg.category == Category::Medium);
  CHECK(alg.task.pairs[0].output == MachineState::with_regs({5, 1, 37, 8}));
  CHECK(alg.task.pairs[1].output == MachineState::with_regs({4, 3, 30, 0}));

  for (const auto& b : suite) {
    if (b.name.rfind("switch-registers", 0) != 0) continue;
    // The same two registers trade values on both pairs.
    std::vector<int> moved;
    for (int r = 0; r < 4; ++r)
      if (b.task.pairs[0].output.regs[r] != b.task.pairs[0].input.regs[r]) moved.push_back(r);
    REQUIRE(moved.size() == 2);
    for (const auto& p : b.task.pairs) {
      CHECK(p.output.regs[moved[0]] == p.input.regs[moved[1]]);
      CHECK(p.output.regs[moved[1]] == p.input.regs[moved[0]]);
    }
  }
}

TEST_CASE("suite generation is deterministic") {
  const auto a = build_suites(2019), b = build_suites(2019);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].task == b[i].task);
  }
}

TEST_CASE("suite files round-trip") {
  const auto suite = build_suites();
  std::stringstream ss;
  write_suite(ss, suite);
  const auto back = read_suite(ss);
  REQUIRE(back.size() == suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    CHECK(back[i].name == suite[i].name);
    CHECK(back[i].category == suite[i].category);
    CHECK(back[i].task == suite[i].task);
    CHECK(back[i].witness == suite[i].witness);
  }
  std::istringstream junk("{\"format\":\"autoasm-pool\"}\n");
  CHECK(code_of([&] { read_suite(junk); }) == ErrorCode::CorruptFile);
}

TEST_CASE("heuristic values") {
  const MachineState a = MachineState::with_regs({0, 0, 0, 0});
  const MachineState b = MachineState::with_regs({3, 4, 0, 0});
  CHECK(DistanceHeuristic{}.value(std::span(&b, 1), std::span(&b, 1)) == 1.0);
  CHECK(DistanceHeuristic{}.value(std::span(&a, 1), std::span(&b, 1)) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("report arithmetic") {
  auto suite = build_suites();
  std::vector<BenchTask> small{suite[0], suite[1], suite[2], suite[3], suite[50]};
  std::vector<TaskOutcome> out(5);
  const Program two = parse_program("addl $1, %eax; subl $1, %eax");
  for (std::size_t i = 0; i < 5; ++i) out[i].task = i;
  out[0].program = two;
  out[0].steps = 2;
  out[1].program = parse_program("addl $1, %eax; addl $1, %eax; subl $2, %eax");
  out[1].steps = 3;
  out[2].program = parse_program("addl $1, %eax; addl $1, %eax; subl $1, %eax; subl $1, %eax");
  out[2].steps = 4;
  out[3].steps = 12;
  out[4].steps = 12;

  BenchReport r;
  add_to_report(r, BaselineKind::Imitation, small, out, 64);
  std::map<std::string, ReportRow> rows;
  for (const auto& row : r.rows) rows[row.category] = row;
  REQUIRE(rows.size() == 4);
  CHECK(rows["easy"].solved == 3);
  CHECK(rows["easy"].tasks == 4);
  CHECK(rows["easy"].success_rate == doctest::Approx(75.0));
  CHECK(*rows["easy"].ave_steps == doctest::Approx(3.0));
  CHECK(*rows["easy"].ave_steps_all == doctest::Approx((2 + 3 + 4 + 12) / 4.0));
  CHECK(rows["medium"].success_rate == 0.0);
  CHECK_FALSE(rows["medium"].ave_steps.has_value());
  CHECK(rows["hard"].tasks == 0);
  CHECK(rows["total"].solved == rows["easy"].solved + rows["medium"].solved + rows["hard"].solved);
  CHECK(rows["total"].tasks == 5);

  const std::string csv = r.csv();
  CHECK(csv.rfind("category,baseline,success_rate,ave_steps,tasks,budget", 0) == 0);
  CHECK(csv.find("medium,imitation,0") != std::string::npos);
  CHECK(csv.find("\xe2\x80\x94") != std::string::npos);
  CHECK(r.text().find("imitation") != std::string::npos);
}

TEST_CASE("baseline names") {
  for (auto k : {BaselineKind::Imitation, BaselineKind::Reinforce, BaselineKind::MctsPrior, BaselineKind::AutoAssemblet})
    CHECK(parse_baseline(baseline_name(k)) == k);
  CHECK(code_of([] { parse_baseline("random"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("baselines are sound and check their inputs") {
  const auto full = build_suites();
  std::vector<BenchTask> suite(full.begin(), full.begin() + 6);
  suite.push_back(full[60]);
  const nn::PolicyNet policy = nn::PolicyNet::create(suite_net(), 1);
  const nn::ValueNet value = nn::ValueNet::create(suite_net(), 2);
  BaselineNets nets;
  nets.imitation = &policy;
  nets.reinforce = &policy;
  nets.policy = &policy;
  nets.value = &value;
  BenchConfig cfg;
  cfg.sample_budget = 16;
  cfg.search.simulations_per_move = 20;
  cfg.search.max_depth = 4;
  cfg.seed = 3;

  for (auto k : {BaselineKind::Imitation, BaselineKind::MctsPrior, BaselineKind::AutoAssemblet}) {
    const auto outs = run_baseline(k, nets, suite, cfg);
    REQUIRE(outs.size() == suite.size());
    for (const auto& o : outs) {
      CHECK(o.steps <= cfg.search.max_depth);
      if (o.success()) CHECK(suite[o.task].task.solved_by(*o.program));
    }
    cfg.jobs = 2;
    const auto again = run_baseline(k, nets, suite, cfg);
    cfg.jobs = 1;
    for (std::size_t i = 0; i < outs.size(); ++i) CHECK(again[i].success() == outs[i].success());
  }

  BaselineNets missing = nets;
  missing.value = nullptr;
  CHECK(code_of([&] { run_baseline(BaselineKind::AutoAssemblet, missing, suite, cfg); }) ==
        ErrorCode::MissingCheckpoint);
  missing = {};
  CHECK(code_of([&] { run_baseline(BaselineKind::Reinforce, missing, suite, cfg); }) == ErrorCode::MissingCheckpoint);

  nn::NetConfig other = suite_net();
  other.space = SpaceConfig{2, false};
  const nn::PolicyNet small = nn::PolicyNet::create(other, 4);
  BaselineNets wrong;
  wrong.imitation = &small;
  CHECK(code_of([&] { run_baseline(BaselineKind::Imitation, wrong, suite, cfg); }) == ErrorCode::ConfigMismatch);
}

TEST_CASE("sampling respects a simulator line budget") {
  const auto suite = build_suites();
  const nn::PolicyNet policy = nn::PolicyNet::create(suite_net(), 9);
  const Task& task = suite[60].task;
  for (std::int64_t budget : {1, 2, 7, 30, 101}) {
    Rng rng(5);
    const TaskOutcome out = sample_programs(policy, task, 1000, 12, rng, budget);
    CHECK(out.lines_executed <= budget);
    if (!out.success()) CHECK(out.lines_executed > budget - 2);
  }
  Rng a(6), b(6);
  const auto unlimited = sample_programs(policy, task, 3, 12, a);
  const auto capped = sample_programs(policy, task, 3, 12, b, 1'000'000);
  CHECK(unlimited.lines_executed == capped.lines_executed);
}

#pragma once

// Hand-designed evaluation suites (easy / medium / hard) and the four
// baselines compared on them.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcts.hpp"
#include "nn/network.hpp"
#include "taskgen.hpp"

namespace autoasm {

enum class Category { Easy, Medium, Hard };

std::string_view category_name(Category c);  // "easy"
Category parse_category(std::string_view name);

struct BenchTask {
  std::string name;
  Category category = Category::Easy;
  Task task;        // K = 2, four registers, no RAM
  Program witness;  // executes to the targets on every pair
};

inline constexpr SpaceConfig kSuiteSpace{4, false};

/// 50 easy, 40 medium and 40 hard tasks, deterministic in `seed`. Every
/// witness is executed before the task is accepted.
std::vector<BenchTask> build_suites(std::uint64_t seed = 2019);

void write_suite(std::ostream& out, const std::vector<BenchTask>& suite);
std::vector<BenchTask> read_suite(std::istream& in);
void save_suite(const std::string& path, const std::vector<BenchTask>& suite);
std::vector<BenchTask> load_suite(const std::string& path);

enum class BaselineKind { Imitation, Reinforce, MctsPrior, AutoAssemblet };

std::string_view baseline_name(BaselineKind k);  // "imitation", "reinforce", "mcts_prior", "autoassemblet"
BaselineKind parse_baseline(std::string_view name);

struct BaselineNets {
  const nn::PolicyNet* imitation = nullptr;  // supervised policy
  const nn::PolicyNet* reinforce = nullptr;  // RL-trained policy
  const nn::PolicyNet* policy = nullptr;     // AutoAssemblet policy
  const nn::ValueNet* value = nullptr;
};

struct BenchConfig {
  int sample_budget = 64;  // programs per task for the sampling baselines
  SearchConfig search;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TaskOutcome {
  std::size_t task = 0;  // index into the suite
  std::optional<Program> program;
  int steps = 0;  // length of the final attempt
  std::int64_t lines_executed = 0;  // simulator instruction executions, all pairs

  bool success() const { return program.has_value(); }
};

/// Sampling baselines: the first attempt is greedy, the rest sample at tau = 1;
/// the first program that solves the task wins. Tree baselines run
/// synthesize(). Every success is re-executed against the targets.
std::vector<TaskOutcome> run_baseline(BaselineKind kind, const BaselineNets& nets, const std::vector<BenchTask>& suite,
                                      const BenchConfig& config);

/// Up to `budget` decoded programs of at most `max_len` lines. A positive
/// `line_budget` also caps lines_executed; decoding stops before it is exceeded.
TaskOutcome sample_programs(const nn::PolicyNet& policy, const Task& task, int budget, int max_len, Rng& rng,
                            std::int64_t line_budget = 0);

struct ReportRow {
  std::string category;  // easy, medium, hard, total
  std::string baseline;
  std::size_t tasks = 0;
  std::size_t solved = 0;
  double success_rate = 0.0;               // percent
  std::optional<double> ave_steps;         // over solved tasks
  std::optional<double> ave_steps_all;     // over all attempts
  int budget = 0;
};

struct BenchReport {
  std::vector<ReportRow> rows;

  std::string csv() const;
  std::string text() const;
};

void add_to_report(BenchReport& report, BaselineKind kind, const std::vector<BenchTask>& suite,
                   const std::vector<TaskOutcome>& outcomes, int budget);

}  // namespace autoasm

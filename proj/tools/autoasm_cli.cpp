// autoasm command line: gen-pool, train, search, bench, inspect, write-suite.
//
// Exit codes: 0 ok, 1 synthesis failed, 2 usage, 3 IO, 4 missing artifact.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "autoasm/autoasm.h"

namespace {

enum Exit { kOk = 0, kSynthesisFailed = 1, kUsage = 2, kIo = 3, kMissing = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_for(aa_status s) {
  switch (s) {
    case AA_OK: return kOk;
    case AA_ERR_IO:
    case AA_ERR_CORRUPT_FILE:
    case AA_ERR_VERSION_MISMATCH: return kIo;
    case AA_ERR_MISSING_CHECKPOINT:
    case AA_ERR_MISSING_GOLD: return kMissing;
    default: return kUsage;
  }
}

struct Failed {
  int code;
};

void check(aa_status s) {
  if (s == AA_OK) return;
  std::cerr << "autoasm: " << aa_status_name(s) << ": " << aa_last_error() << '\n';
  throw Failed{exit_for(s)};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  aa_string_free(s);
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, bool mandatory) {
  if (flag) return *flag;
  if (const char* env = std::getenv("AUTOASM_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("AUTOASM_SEED is not an unsigned integer");
  }
  if (mandatory) throw UsageError("a seed is required: pass --seed or set AUTOASM_SEED");
  return 0;
}

void require_existing(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    std::cerr << "autoasm: " << what << " '" << path << "' does not exist\n";
    throw Failed{kMissing};
  }
}

std::vector<std::int32_t> parse_state(const std::string& text, int cells) {
  std::vector<std::int32_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw UsageError("bad state value '" + item + "' in \"" + text + "\"");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size() || v < INT32_MIN || v > INT32_MAX)
      throw UsageError("bad state value '" + item + "' in \"" + text + "\"");
    out.push_back(static_cast<std::int32_t>(v));
  }
  if (static_cast<int>(out.size()) != cells)
    throw UsageError("state \"" + text + "\" has " + std::to_string(out.size()) + " values, expected " +
                     std::to_string(cells));
  return out;
}

void print_progress(const char* line, void*) { std::cerr << line << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural program synthesis for a reduced x86 instruction set"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(aa_version()));

  // gen-pool
  auto* gen = app.add_subcommand("gen-pool", "Generate a task pool from random pilot programs");
  aa_pool_config pc;
  aa_pool_config_default(&pc);
  bool gen_ram = false;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  gen->add_option("--n", pc.count, "Number of tasks")->required()->check(CLI::Range(1LL, 100000000LL));
  gen->add_option("--lines", pc.program_length, "Pilot program length")->check(CLI::Range(1, 64));
  gen->add_option("--regs", pc.num_registers, "Registers in use (1-4)")->check(CLI::Range(1, 4));
  gen->add_flag("--ram", gen_ram, "Enable the four RAM slots");
  gen->add_option("--pairs", pc.pairs_per_task, "Input-output pairs per task")->check(CLI::Range(1, 16));
  gen->add_option("--init-low", pc.init_low, "Lowest initial cell value");
  gen->add_option("--init-high", pc.init_high, "Highest initial cell value");
  gen->add_option("--seed", gen_seed, "Root seed");
  gen->add_option("--out", gen_out, "Pool file to write")->required();

  // train
  auto* train = app.add_subcommand("train", "Imitation pretraining followed by policy-gradient training");
  std::string tr_pool, tr_out, tr_config;
  std::optional<std::uint64_t> tr_seed;
  std::optional<int> tr_epochs, tr_batch, tr_pre_epochs, tr_hidden, tr_demb, tr_jobs;
  std::vector<double> tr_temps;
  bool tr_pretrain_only = false, tr_det = false;
  train->add_option("--pool", tr_pool, "Pool file")->required();
  train->add_option("--out", tr_out, "Output directory")->required();
  train->add_option("--config", tr_config, "JSON training config");
  train->add_option("--seed", tr_seed, "Root seed");
  train->add_option("--epochs", tr_epochs, "RL epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--batch", tr_batch, "Tasks per epoch")->check(CLI::PositiveNumber);
  train->add_option("--pretrain-epochs", tr_pre_epochs, "Imitation epochs")->check(CLI::NonNegativeNumber);
  train->add_option("--temperatures", tr_temps, "Sampling temperatures, comma separated")->delimiter(',');
  train->add_option("--hidden", tr_hidden, "Hidden width")->check(CLI::PositiveNumber);
  train->add_option("--d-emb", tr_demb, "Embedding width")->check(CLI::PositiveNumber);
  train->add_option("--jobs", tr_jobs, "Worker threads")->check(CLI::PositiveNumber);
  train->add_flag("--pretrain-only", tr_pretrain_only, "Stop after imitation pretraining");
  train->add_flag("--deterministic", tr_det, "Single worker, wall-clock column zeroed");

  // search
  auto* search = app.add_subcommand("search", "Synthesize a program for one task");
  std::string se_policy, se_value, se_task_file;
  std::vector<std::string> se_inputs, se_outputs;
  std::optional<std::uint64_t> se_seed;
  aa_search_options so;
  aa_search_options_default(&so);
  bool se_det = false;
  int se_jobs = 1;
  search->add_option("--policy", se_policy, "Policy checkpoint")->required();
  search->add_option("--value", se_value, "Value checkpoint (default: distance heuristic)");
  search->add_option("--task-file", se_task_file, "File with one 'in -> out' pair per line");
  search->add_option("--input", se_inputs, "Input state, e.g. \"5,1,7,8\" (repeatable)");
  search->add_option("--output", se_outputs, "Target state (repeatable)");
  search->add_option("--simulations", so.simulations_per_move, "Simulations per move")->check(CLI::PositiveNumber);
  search->add_option("--max-depth", so.max_depth, "Maximum program length")->check(CLI::PositiveNumber);
  search->add_option("--rollout", so.rollout_limit, "Rollout length")->check(CLI::PositiveNumber);
  search->add_option("--width", so.expansion_width, "Children per node")->check(CLI::PositiveNumber);
  search->add_option("--epsilon", so.epsilon, "Exploration constant")->check(CLI::NonNegativeNumber);
  search->add_option("--seed", se_seed, "Root seed");
  search->add_flag("--deterministic", se_det, "Accepted for symmetry; search is single threaded");
  search->add_option("--jobs", se_jobs, "Accepted for symmetry")->check(CLI::PositiveNumber);

  // bench
  auto* bench = app.add_subcommand("bench", "Run baselines on the evaluation suite");
  aa_bench_options bo;
  aa_bench_options_default(&bo);
  std::string be_baselines = "imitation,reinforce,mcts_prior,autoassemblet";
  std::string be_policy, be_value, be_imitation, be_reinforce, be_suite, be_out = "bench";
  std::optional<std::uint64_t> be_seed;
  bool be_det = false;
  bench->add_option("--baselines", be_baselines, "Comma separated: imitation, reinforce, mcts_prior, autoassemblet");
  bench->add_option("--policy", be_policy, "AutoAssemblet policy checkpoint (fallback for the others)");
  bench->add_option("--value", be_value, "AutoAssemblet value checkpoint");
  bench->add_option("--imitation-policy", be_imitation, "Supervised policy checkpoint");
  bench->add_option("--reinforce-policy", be_reinforce, "RL policy checkpoint");
  bench->add_option("--suite", be_suite, "Suite file (default: built-in suite)");
  bench->add_option("--out", be_out, "Output directory for report.csv, report.txt and outcomes.jsonl");
  bench->add_option("--budget", bo.sample_budget, "Programs per task for sampling baselines")
      ->check(CLI::PositiveNumber);
  bench->add_option("--simulations", bo.search.simulations_per_move, "Simulations per move")
      ->check(CLI::PositiveNumber);
  bench->add_option("--max-depth", bo.search.max_depth, "Maximum program length")->check(CLI::PositiveNumber);
  bench->add_option("--seed", be_seed, "Root seed");
  bench->add_option("--jobs", bo.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--deterministic", be_det, "Single worker");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Describe a pool or checkpoint file");
  std::string in_path;
  inspect->add_option("path", in_path, "Pool or checkpoint")->required();

  // write-suite
  auto* wsuite = app.add_subcommand("write-suite", "Write the built-in evaluation suite to a file");
  std::string ws_out;
  std::uint64_t ws_seed = 2019;
  wsuite->add_option("--out", ws_out, "Suite file")->required();
  wsuite->add_option("--seed", ws_seed, "Suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      pc.ram_enabled = gen_ram ? 1 : 0;
      pc.seed = resolve_seed(gen_seed, false);
      aa_pool* pool = nullptr;
      int64_t dropped = 0;
      check(aa_pool_generate(&pc, &pool, &dropped));
      const aa_status st = aa_pool_save(pool, gen_out.c_str());
      const int64_t n = aa_pool_size(pool);
      aa_pool_free(pool);
      check(st);
      std::cout << "tasks: " << n << "\nduplicates dropped: " << dropped << "\nwritten: " << gen_out << '\n';
      return kOk;
    }

    if (*train) {
      require_existing(tr_pool, "pool");
      nlohmann::json cfg = nlohmann::json::object();
      if (!tr_config.empty()) {
        require_existing(tr_config, "config");
        std::ifstream in(tr_config);
        try {
          cfg = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw UsageError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!cfg.is_object()) throw UsageError("config must be a JSON object");
      }
      const bool seed_in_config = cfg.contains("seed");
      if (tr_seed || !seed_in_config) cfg["seed"] = resolve_seed(tr_seed, true);
      if (tr_epochs) cfg["epochs"] = *tr_epochs;
      if (tr_batch) cfg["batch_size"] = *tr_batch;
      if (tr_pre_epochs) cfg["pretrain_epochs"] = *tr_pre_epochs;
      if (!tr_temps.empty()) cfg["temperatures"] = tr_temps;
      if (tr_hidden) cfg["hidden"] = *tr_hidden;
      if (tr_demb) cfg["d_emb"] = *tr_demb;
      if (tr_jobs) cfg["jobs"] = *tr_jobs;
      if (tr_det) cfg["deterministic"] = true;
      const std::string text = cfg.dump();
      check(aa_train(tr_pool.c_str(), tr_out.c_str(), text.c_str(), tr_pretrain_only ? 1 : 0, print_progress,
                     nullptr));
      std::cout << "outputs written to " << tr_out << '\n';
      return kOk;
    }

    if (*search) {
      require_existing(se_policy, "policy checkpoint");
      if (!se_value.empty()) require_existing(se_value, "value checkpoint");
      so.seed = resolve_seed(se_seed, false);
      aa_engine* engine = nullptr;
      check(aa_engine_load(se_policy.c_str(), se_value.empty() ? nullptr : se_value.c_str(), &engine));
      std::unique_ptr<aa_engine, void (*)(aa_engine*)> guard(engine, aa_engine_free);
      const int cells = aa_engine_cells(engine);

      std::vector<std::pair<std::string, std::string>> pairs;
      if (!se_task_file.empty()) {
        require_existing(se_task_file, "task file");
        std::ifstream in(se_task_file);
        if (!in) {
          std::cerr << "autoasm: cannot read '" << se_task_file << "'\n";
          return kIo;
        }
        for (std::string line; std::getline(in, line);) {
          if (line.empty() || line[0] == '#') continue;
          const auto arrow = line.find("->");
          if (arrow == std::string::npos) throw UsageError("task file line without '->': " + line);
          pairs.emplace_back(line.substr(0, arrow), line.substr(arrow + 2));
        }
      }
      if (se_inputs.size() != se_outputs.size()) throw UsageError("--input and --output must be given equally often");
      for (std::size_t k = 0; k < se_inputs.size(); ++k) pairs.emplace_back(se_inputs[k], se_outputs[k]);
      if (pairs.empty()) throw UsageError("give a task with --task-file or --input/--output");

      std::vector<std::int32_t> ins, outs;
      for (const auto& [i, o] : pairs) {
        const auto a = parse_state(i, cells), b = parse_state(o, cells);
        ins.insert(ins.end(), a.begin(), a.end());
        outs.insert(outs.end(), b.begin(), b.end());
      }
      aa_program* prog = nullptr;
      int32_t solved = 0;
      check(aa_engine_search(engine, ins.data(), outs.data(), static_cast<int32_t>(pairs.size()), &so, &prog,
                             &solved));
      if (!solved) {
        std::cout << "FAIL\n";
        return kSynthesisFailed;
      }
      char* text = nullptr;
      const aa_status st = aa_program_format(prog, &text);
      aa_program_free(prog);
      check(st);
      const std::string body = take(text);
      std::cout << body << (body.empty() ? "" : "\n") << "OK\n";
      return kOk;
    }

    if (*bench) {
      std::vector<std::string> names;
      std::stringstream ss(be_baselines);
      for (std::string n; std::getline(ss, n, ',');) {
        if (n.empty()) continue;
        if (n != "imitation" && n != "reinforce" && n != "mcts_prior" && n != "autoassemblet")
          throw UsageError("unknown baseline '" + n + "'");
        names.push_back(n);
      }
      if (names.empty()) throw UsageError("no baselines requested");
      if (!be_suite.empty()) require_existing(be_suite, "suite");
      if (be_imitation.empty()) be_imitation = be_policy;
      if (be_reinforce.empty()) be_reinforce = be_policy;
      bo.seed = resolve_seed(be_seed, true);
      bo.search.seed = bo.seed;
      if (be_det) bo.jobs = 1;
      bo.baselines = be_baselines.c_str();
      bo.policy = be_policy.empty() ? nullptr : be_policy.c_str();
      bo.value = be_value.empty() ? nullptr : be_value.c_str();
      bo.imitation_policy = be_imitation.empty() ? nullptr : be_imitation.c_str();
      bo.reinforce_policy = be_reinforce.empty() ? nullptr : be_reinforce.c_str();
      bo.suite_path = be_suite.empty() ? nullptr : be_suite.c_str();
      bo.out_dir = be_out.c_str();
      char* report = nullptr;
      check(aa_bench(&bo, &report));
      std::cout << take(report);
      return kOk;
    }

    if (*inspect) {
      char* text = nullptr;
      const aa_status st = aa_inspect(in_path.c_str(), &text);
      if (st != AA_OK) {
        std::cerr << "autoasm: " << aa_status_name(st) << ": " << aa_last_error() << '\n';
        return kIo;
      }
      std::cout << take(text);
      return kOk;
    }

    if (*wsuite) {
      check(aa_suite_write(ws_out.c_str(), ws_seed));
      std::cout << "written: " << ws_out << '\n';
      return kOk;
    }
  } catch (const Failed& f) {
    return f.code;
  } catch (const UsageError& e) {
    std::cerr << "autoasm: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

#include "autoasm/autoasm.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "machine.hpp"
#include "mcts.hpp"
#include "nn/checkpoint.hpp"
#include "taskgen.hpp"
#include "trainer.hpp"

struct aa_program {
  autoasm::Program prog;
};

struct aa_pool {
  autoasm::TaskPool pool;
};

struct aa_engine {
  autoasm::nn::PolicyNet policy;
  std::optional<autoasm::nn::ValueNet> value;
};

namespace {

using namespace autoasm;

thread_local std::string g_last_error;

aa_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return AA_ERR_INVALID_ARGUMENT;
    case ErrorCode::Syntax: return AA_ERR_SYNTAX;
    case ErrorCode::Constraint: return AA_ERR_CONSTRAINT;
    case ErrorCode::IllegalInstruction: return AA_ERR_ILLEGAL_INSTRUCTION;
    case ErrorCode::RamDisabled: return AA_ERR_RAM_DISABLED;
    case ErrorCode::ConfigMismatch: return AA_ERR_CONFIG_MISMATCH;
    case ErrorCode::DegenerateTask: return AA_ERR_DEGENERATE_TASK;
    case ErrorCode::UnknownTask: return AA_ERR_UNKNOWN_TASK;
    case ErrorCode::ShapeMismatch: return AA_ERR_SHAPE_MISMATCH;
    case ErrorCode::Io: return AA_ERR_IO;
    case ErrorCode::CorruptFile: return AA_ERR_CORRUPT_FILE;
    case ErrorCode::VersionMismatch: return AA_ERR_VERSION_MISMATCH;
    case ErrorCode::MissingGold: return AA_ERR_MISSING_GOLD;
    case ErrorCode::MissingCheckpoint: return AA_ERR_MISSING_CHECKPOINT;
    case ErrorCode::NoLegalExpansion: return AA_ERR_NO_LEGAL_EXPANSION;
  }
  return AA_ERR_INTERNAL;
}

template <class Fn>
aa_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AA_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_file(const char* path, const char* what) {
  if (!path || !*path) fail(ErrorCode::MissingCheckpoint, std::string("no ") + what + " checkpoint given");
  if (!std::filesystem::exists(path))
    fail(ErrorCode::MissingCheckpoint, std::string(what) + " checkpoint '" + path + "' does not exist");
}

SearchConfig search_config(const aa_search_options& o) {
  SearchConfig c;
  c.epsilon = o.epsilon;
  c.gamma = o.gamma;
  c.max_depth = o.max_depth;
  c.rollout_limit = o.rollout_limit;
  c.simulations_per_move = o.simulations_per_move;
  c.expansion_width = o.expansion_width;
  c.seed = o.seed;
  c.validate();
  return c;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

}  // namespace

extern "C" {

const char* aa_version(void) { return "0.1.0"; }

const char* aa_status_name(aa_status status) {
  switch (status) {
    case AA_OK: return "ok";
    case AA_ERR_INTERNAL: return "internal error";
    default: break;
  }
  for (int c = 0; c <= static_cast<int>(ErrorCode::NoLegalExpansion); ++c)
    if (status_of(static_cast<ErrorCode>(c)) == status) return error_code_name(static_cast<ErrorCode>(c));
  return "unknown status";
}

const char* aa_last_error(void) { return g_last_error.c_str(); }

void aa_string_free(char* s) { std::free(s); }

// ---- programs --------------------------------------------------------------

aa_status aa_program_parse(const char* text, aa_program** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = nullptr;
    auto p = std::make_unique<aa_program>();
    p->prog = parse_program(text);
    *out = p.release();
  });
}

void aa_program_free(aa_program* prog) { delete prog; }

size_t aa_program_length(const aa_program* prog) { return prog ? prog->prog.size() : 0; }

aa_status aa_program_format(const aa_program* prog, char** out) {
  return guarded([&] {
    require(prog, "program");
    require(out, "out");
    *out = dup_string(format_program(prog->prog));
  });
}

aa_status aa_program_run(const aa_program* prog, const int32_t regs_in[4], const int32_t* ram_in, int32_t regs_out[4],
                         int32_t* ram_out) {
  return guarded([&] {
    require(prog, "program");
    require(regs_in, "regs_in");
    require(regs_out, "regs_out");
    MachineState s;
    std::copy(regs_in, regs_in + kNumRegisters, s.regs.begin());
    if (ram_in) {
      s.ram.emplace();
      std::copy(ram_in, ram_in + kNumMemSlots, s.ram->begin());
    }
    const MachineState r = run(s, prog->prog);
    std::copy(r.regs.begin(), r.regs.end(), regs_out);
    if (ram_out && r.ram) std::copy(r.ram->begin(), r.ram->end(), ram_out);
  });
}

// ---- pools -----------------------------------------------------------------

void aa_pool_config_default(aa_pool_config* config) {
  if (!config) return;
  const PilotConfig d;
  config->count = 1000;
  config->program_length = d.program_length;
  config->num_registers = d.num_registers;
  config->ram_enabled = d.ram_enabled ? 1 : 0;
  config->pairs_per_task = d.pairs_per_task;
  config->init_low = d.init_low;
  config->init_high = d.init_high;
  config->seed = 0;
}

aa_status aa_pool_generate(const aa_pool_config* config, aa_pool** out, int64_t* duplicates_dropped) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = nullptr;
    if (config->count < 1) fail(ErrorCode::InvalidArgument, "pool size must be >= 1");
    PilotConfig c;
    c.program_length = config->program_length;
    c.num_registers = config->num_registers;
    c.ram_enabled = config->ram_enabled != 0;
    c.pairs_per_task = config->pairs_per_task;
    c.init_low = config->init_low;
    c.init_high = config->init_high;
    c.validate();
    Rng rng(config->seed);
    PoolBuildStats stats;
    auto p = std::make_unique<aa_pool>();
    p->pool = build_pool(static_cast<std::size_t>(config->count), c, rng, &stats);
    if (duplicates_dropped) *duplicates_dropped = static_cast<int64_t>(stats.duplicates_dropped);
    *out = p.release();
  });
}

aa_status aa_pool_load(const char* path, aa_pool** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto p = std::make_unique<aa_pool>();
    p->pool = load_pool(path);
    *out = p.release();
  });
}

aa_status aa_pool_save(const aa_pool* pool, const char* path) {
  return guarded([&] {
    require(pool, "pool");
    require(path, "path");
    save_pool(path, pool->pool);
  });
}

int64_t aa_pool_size(const aa_pool* pool) { return pool ? static_cast<int64_t>(pool->pool.size()) : 0; }

aa_status aa_pool_describe(const aa_pool* pool, char** out) {
  return guarded([&] {
    require(pool, "pool");
    require(out, "out");
    *out = dup_string(describe_pool(pool->pool));
  });
}

void aa_pool_free(aa_pool* pool) { delete pool; }

// ---- artifacts -------------------------------------------------------------

aa_status aa_checkpoint_describe(const char* path, char** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = dup_string(nn::describe_checkpoint(nn::read_checkpoint_header(path)));
  });
}

aa_status aa_inspect(const char* path, char** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, std::string("cannot open '") + path + "'");
    char magic[8] = {};
    in.read(magic, sizeof magic);
    in.close();
    if (std::memcmp(magic, "AASMCKPT", 8) == 0) {
      *out = dup_string(nn::describe_checkpoint(nn::read_checkpoint_header(path)));
    } else {
      *out = dup_string(describe_pool(load_pool(path)));
    }
  });
}

// ---- training --------------------------------------------------------------

aa_status aa_train(const char* pool_path, const char* out_dir, const char* config_json, int32_t pretrain_only,
                   aa_progress_fn progress, void* user) {
  return guarded([&] {
    require(pool_path, "pool_path");
    require(out_dir, "out_dir");
    auto say = [&](const std::string& line) {
      if (progress) progress(line.c_str(), user);
    };
    const TrainConfig config = config_json ? train_config_from_json(config_json) : TrainConfig{};
    TaskPool pool = load_pool(pool_path);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
    write_text(dir / "config.json", train_config_to_json(config) + "\n");

    const nn::NetConfig net = net_config_for(pool.config, config);
    nn::PolicyNet policy = nn::PolicyNet::create(net, derive_seed(config.seed, {1}));
    say("pretraining on " + std::to_string(pool.size()) + " tasks");
    const ImitationReport rep = pretrain_imitation(policy, pool, config);
    nn::save_policy(policy, (dir / "policy_imitation.ckpt").string());
    const nlohmann::json j = {{"train_examples", rep.train_examples},
                              {"holdout_examples", rep.holdout_examples},
                              {"final_train_loss", rep.final_train_loss},
                              {"holdout_exact_accuracy", rep.holdout_exact_accuracy},
                              {"holdout_next_line_accuracy", rep.holdout_next_line_accuracy},
                              {"epoch_losses", rep.epoch_losses},
                              {"epoch_holdout_accuracy", rep.epoch_holdout_accuracy}};
    write_text(dir / "imitation.json", j.dump(2) + "\n");
    std::ostringstream os;
    os << "imitation: loss " << rep.final_train_loss << ", hold-out next-line accuracy "
       << rep.holdout_next_line_accuracy << " (exact " << rep.holdout_exact_accuracy << ")";
    say(os.str());
    if (pretrain_only) return;

    Learner learner(std::move(policy), nn::ValueNet::create(net, derive_seed(config.seed, {2})), config);
    const auto summary = run_training(learner, pool, config, out_dir, [&](const EpochMetrics& m) {
      say(metrics_row(m, config.deterministic));
    });
    save_pool((dir / "pool_final.jsonl").string(), pool);
    say("finished after " + std::to_string(summary.epochs_run) + " epochs" +
        (summary.plateaued ? " (success rate plateaued)" : ""));
  });
}

// ---- search ----------------------------------------------------------------

void aa_search_options_default(aa_search_options* options) {
  if (!options) return;
  const SearchConfig d;
  options->epsilon = d.epsilon;
  options->gamma = d.gamma;
  options->max_depth = d.max_depth;
  options->rollout_limit = d.rollout_limit;
  options->simulations_per_move = d.simulations_per_move;
  options->expansion_width = d.expansion_width;
  options->seed = d.seed;
}

aa_status aa_engine_load(const char* policy_path, const char* value_path, aa_engine** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    require_file(policy_path, "policy");
    auto e = std::make_unique<aa_engine>(aa_engine{nn::load_policy(policy_path), std::nullopt});
    if (value_path) {
      require_file(value_path, "value");
      e->value = nn::load_value(value_path);
      if (!(e->value->config.space == e->policy.config.space) || e->value->config.pairs != e->policy.config.pairs)
        fail(ErrorCode::ConfigMismatch, "policy and value checkpoints were built for different tasks");
    }
    *out = e.release();
  });
}

void aa_engine_free(aa_engine* engine) { delete engine; }

int32_t aa_engine_cells(const aa_engine* engine) { return engine ? engine->policy.config.cells() : 0; }

aa_status aa_engine_search(const aa_engine* engine, const int32_t* inputs, const int32_t* outputs, int32_t pairs,
                           const aa_search_options* options, aa_program** out, int32_t* solved) {
  return guarded([&] {
    require(engine, "engine");
    require(inputs, "inputs");
    require(outputs, "outputs");
    require(out, "out");
    *out = nullptr;
    if (solved) *solved = 0;
    if (pairs < 1) fail(ErrorCode::InvalidArgument, "at least one pair is required");
    aa_search_options defaults;
    aa_search_options_default(&defaults);
    const SearchConfig config = search_config(options ? *options : defaults);

    const SpaceConfig space = engine->policy.config.space;
    const int cells = space.cells();
    Task task;
    for (int k = 0; k < pairs; ++k) {
      std::vector<std::int32_t> in(inputs + k * cells, inputs + (k + 1) * cells);
      std::vector<std::int32_t> o(outputs + k * cells, outputs + (k + 1) * cells);
      task.pairs.push_back({state_from_cells(in, space), state_from_cells(o, space)});
    }
    NetworkPolicy guide(engine->policy);
    DistanceHeuristic heuristic;
    std::optional<NetworkValue> value;
    if (engine->value) value.emplace(*engine->value);
    const StateEvaluator& eval = value ? static_cast<const StateEvaluator&>(*value) : heuristic;
    auto result = synthesize(task, guide, eval, config);
    if (result.program) {
      *out = new aa_program{std::move(*result.program)};
      if (solved) *solved = 1;
    }
  });
}

// ---- benchmark -------------------------------------------------------------

void aa_bench_options_default(aa_bench_options* options) {
  if (!options) return;
  *options = aa_bench_options{};
  options->sample_budget = BenchConfig{}.sample_budget;
  aa_search_options_default(&options->search);
  options->jobs = 1;
}

aa_status aa_bench(const aa_bench_options* options, char** report) {
  return guarded([&] {
    require(options, "options");
    const std::vector<BenchTask> suite =
        options->suite_path ? load_suite(options->suite_path) : build_suites();

    std::vector<BaselineKind> kinds;
    const std::string list = options->baselines ? options->baselines : "imitation,reinforce,mcts_prior,autoassemblet";
    std::stringstream ss(list);
    for (std::string name; std::getline(ss, name, ',');)
      if (!name.empty()) kinds.push_back(parse_baseline(name));
    if (kinds.empty()) fail(ErrorCode::InvalidArgument, "no baselines requested");

    std::optional<nn::PolicyNet> imitation, reinforce, policy;
    std::optional<nn::ValueNet> value;
    BaselineNets nets;
    for (BaselineKind k : kinds) {
      if ((k == BaselineKind::Imitation || k == BaselineKind::MctsPrior) && !imitation) {
        require_file(options->imitation_policy, "supervised policy");
        imitation = nn::load_policy(options->imitation_policy);
        nets.imitation = &*imitation;
      }
      if (k == BaselineKind::Reinforce && !reinforce) {
        require_file(options->reinforce_policy, "RL policy");
        reinforce = nn::load_policy(options->reinforce_policy);
        nets.reinforce = &*reinforce;
      }
      if (k == BaselineKind::AutoAssemblet && !policy) {
        require_file(options->policy, "policy");
        require_file(options->value, "value");
        policy = nn::load_policy(options->policy);
        value = nn::load_value(options->value);
        nets.policy = &*policy;
        nets.value = &*value;
      }
    }

    BenchConfig config;
    config.sample_budget = options->sample_budget;
    config.search = search_config(options->search);
    config.seed = options->seed;
    config.jobs = options->jobs;

    BenchReport rep;
    std::string records;
    for (BaselineKind k : kinds) {
      const auto outcomes = run_baseline(k, nets, suite, config);
      const bool sampling = k == BaselineKind::Imitation || k == BaselineKind::Reinforce;
      add_to_report(rep, k, suite, outcomes, sampling ? config.sample_budget : config.search.simulations_per_move);
      for (const auto& o : outcomes) {
        nlohmann::json j = {{"baseline", std::string(baseline_name(k))},
                            {"task", suite[o.task].name},
                            {"category", std::string(category_name(suite[o.task].category))},
                            {"solved", o.success()},
                            {"steps", o.steps},
                            {"lines_executed", o.lines_executed}};
        j["program"] = o.program ? nlohmann::json(format_program(*o.program, "; ")) : nlohmann::json(nullptr);
        records += j.dump() + "\n";
      }
    }
    if (options->out_dir) {
      const std::filesystem::path dir(options->out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) fail(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
      write_text(dir / "report.csv", rep.csv());
      write_text(dir / "report.txt", rep.text());
      write_text(dir / "outcomes.jsonl", records);
    }
    if (report) *report = dup_string(rep.text());
  });
}

aa_status aa_suite_write(const char* path, uint64_t seed) {
  return guarded([&] {
    require(path, "path");
    save_suite(path, build_suites(seed));
  });
}

}  // extern "C"

#include "taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "error.hpp"

namespace autoasm {

using nlohmann::json;

namespace {

MachineState random_state(const PilotConfig& config, Rng& rng) {
  MachineState s;
  for (int r = 0; r < config.num_registers; ++r)
    s.regs[r] = static_cast<std::int32_t>(rng.between(config.init_low, config.init_high));
  if (config.ram_enabled) {
    s.ram.emplace();
    for (auto& m : *s.ram) m = static_cast<std::int32_t>(rng.between(config.init_low, config.init_high));
  }
  return s;
}

std::vector<std::int32_t> flat_pair(const IoPair& p, const SpaceConfig& space) {
  std::vector<std::int32_t> v = cells_of(p.input, space);
  const auto out = cells_of(p.output, space);
  v.insert(v.end(), out.begin(), out.end());
  return v;
}

std::vector<std::vector<std::int32_t>> sorted_pairs(const Task& t) {
  const SpaceConfig full{kNumRegisters, !t.pairs.empty() && t.pairs.front().input.has_ram()};
  std::vector<std::vector<std::int32_t>> v;
  v.reserve(t.pairs.size());
  for (const auto& p : t.pairs) v.push_back(flat_pair(p, full));
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

bool Task::solved_by(const Program& prog) const {
  for (const auto& p : pairs)
    if (!state_equals(run(p.input, prog), p.output)) return false;
  return true;
}

void PilotConfig::validate() const {
  if (program_length < 1) fail(ErrorCode::InvalidArgument, "program length must be >= 1");
  if (num_registers < 1 || num_registers > kNumRegisters)
    fail(ErrorCode::InvalidArgument, "register count must be within 1..4");
  if (pairs_per_task < 1) fail(ErrorCode::InvalidArgument, "pairs per task must be >= 1");
  if (init_low > init_high) fail(ErrorCode::InvalidArgument, "empty init value range");
}

Program generate_pilot_program(const PilotConfig& config, Rng& rng) {
  config.validate();
  const ActionSpace space(config.space());
  Program prog;
  prog.reserve(config.program_length);
  for (int i = 0; i < config.program_length; ++i) prog.push_back(space[rng.below(space.size())]);
  return prog;
}

Task make_task(const Program& prog, const PilotConfig& config, Rng& rng) {
  config.validate();
  for (const auto& instr : prog)
    if (!is_legal(instr, config.space()))
      fail(ErrorCode::IllegalInstruction, "'" + format_instruction(instr) + "' is outside the action space");

  constexpr int kMaxIdentityDraws = 100;
  for (int attempt = 0; attempt < kMaxIdentityDraws; ++attempt) {
    Task task;
    task.gold = prog;
    bool changes = false;
    for (int k = 0; k < config.pairs_per_task; ++k) {
      IoPair p;
      p.input = random_state(config, rng);
      p.output = run(p.input, prog);
      changes = changes || !(p.input == p.output);
      task.pairs.push_back(std::move(p));
    }
    if (changes) return task;
  }
  fail(ErrorCode::DegenerateTask, "program leaves every sampled input unchanged: " + format_program(prog, "; "));
}

std::uint64_t pair_multiset_hash(const Task& task) {
  std::uint64_t h = 0x51ed270b27a1c3d5ULL;
  for (const auto& flat : sorted_pairs(task)) {
    for (std::int32_t v : flat) h = splitmix64(h ^ static_cast<std::uint32_t>(v));
    h = splitmix64(h + 0x2545f4914f6cdd1dULL);
  }
  return h;
}

bool same_pair_multiset(const Task& a, const Task& b) { return sorted_pairs(a) == sorted_pairs(b); }

TaskPool build_pool(std::size_t n, const PilotConfig& config, Rng& rng, PoolBuildStats* stats) {
  config.validate();
  if (n < 1) fail(ErrorCode::InvalidArgument, "pool size must be >= 1");

  TaskPool pool;
  pool.config = config;
  pool.tasks.reserve(n);
  PoolBuildStats local;
  std::unordered_multimap<std::uint64_t, std::size_t> seen;
  seen.reserve(n * 2);

  const std::size_t max_attempts = 1000 * n + 10000;
  std::size_t attempts = 0;
  while (pool.tasks.size() < n) {
    if (++attempts > max_attempts)
      fail(ErrorCode::InvalidArgument, "cannot produce " + std::to_string(n) + " distinct tasks for this config");
    Program prog = generate_pilot_program(config, rng);
    Task task;
    try {
      task = make_task(prog, config, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateTask) throw;
      ++local.degenerate_programs;
      continue;
    }
    const std::uint64_t h = pair_multiset_hash(task);
    const auto [lo, hi] = seen.equal_range(h);
    const bool dup = std::any_of(lo, hi, [&](const auto& kv) { return same_pair_multiset(pool.tasks[kv.second], task); });
    if (dup) {
      ++local.duplicates_dropped;
      continue;
    }
    task.id = static_cast<std::int64_t>(pool.tasks.size());
    seen.emplace(h, pool.tasks.size());
    pool.tasks.push_back(std::move(task));
  }
  pool.weights.assign(n, 0.0);
  if (stats) *stats = local;
  return pool;
}

std::vector<double> sampling_probabilities(const std::vector<double>& weights) {
  std::vector<double> p(weights.size());
  if (weights.empty()) return p;
  const double mx = *std::max_element(weights.begin(), weights.end());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += (p[i] = std::exp(weights[i] - mx));
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::size_t> sample_batch(const TaskPool& pool, std::size_t b, Rng& rng) {
  if (pool.empty()) fail(ErrorCode::InvalidArgument, "cannot sample from an empty pool");
  if (b < 1) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  const std::vector<double> p = sampling_probabilities(pool.weights);
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);

  std::vector<std::size_t> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(static_cast<std::size_t>(it - cdf.begin()));
  }
  return out;
}

void update_weight(TaskPool& pool, std::int64_t task_id, bool success, const WeightRule& rule) {
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= pool.size())
    fail(ErrorCode::UnknownTask, "no task with id " + std::to_string(task_id));
  const bool increase = rule.literal_alg1_sign ? success : !success;
  double& w = pool.weights[task_id];
  w = std::clamp(w + (increase ? 1.0 : -1.0), -rule.w_max, rule.w_max);
}

// ---------------------------------------------------------------------------

void write_pool(std::ostream& out, const TaskPool& pool) {
  const SpaceConfig space = pool.config.space();
  json header = {{"format", "autoasm-pool"},
                 {"version", kPoolFormatVersion},
                 {"num_registers", pool.config.num_registers},
                 {"ram_enabled", pool.config.ram_enabled},
                 {"pairs_per_task", pool.config.pairs_per_task},
                 {"program_length", pool.config.program_length},
                 {"init_low", pool.config.init_low},
                 {"init_high", pool.config.init_high},
                 {"count", pool.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Task& t = pool.tasks[i];
    json pairs = json::array();
    for (const auto& p : t.pairs) pairs.push_back(flat_pair(p, space));
    json rec = {{"id", t.id},
                {"K", t.pairs.size()},
                {"pairs", std::move(pairs)},
                {"gold", t.gold ? format_program(*t.gold, "; ") : std::string()},
                {"weight", pool.weights[i]}};
    out << rec.dump() << '\n';
  }
}

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::CorruptFile, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptFile, std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

TaskPool read_pool(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::CorruptFile, "empty pool file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    fail(ErrorCode::CorruptFile, "pool header is not valid JSON");
  }
  if (field<std::string>(header, "format") != "autoasm-pool") fail(ErrorCode::CorruptFile, "not a pool file");
  if (field<int>(header, "version") != kPoolFormatVersion)
    fail(ErrorCode::VersionMismatch, "unsupported pool format version");

  TaskPool pool;
  pool.config.num_registers = field<int>(header, "num_registers");
  pool.config.ram_enabled = field<bool>(header, "ram_enabled");
  pool.config.pairs_per_task = field<int>(header, "pairs_per_task");
  pool.config.program_length = field<int>(header, "program_length");
  pool.config.init_low = header.value("init_low", 0);
  pool.config.init_high = header.value("init_high", 9);
  try {
    pool.config.validate();
  } catch (const Error& e) {
    fail(ErrorCode::CorruptFile, std::string("bad pool header: ") + e.what());
  }
  const auto count = field<std::size_t>(header, "count");
  const SpaceConfig space = pool.config.space();
  const int cells = space.cells();

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      fail(ErrorCode::CorruptFile, "record " + std::to_string(pool.size()) + " is not valid JSON");
    }
    Task t;
    t.id = field<std::int64_t>(rec, "id");
    if (t.id != static_cast<std::int64_t>(pool.size())) fail(ErrorCode::CorruptFile, "task ids must be 0..n-1 in order");
    const auto flat = field<std::vector<std::vector<std::int32_t>>>(rec, "pairs");
    if (flat.size() != field<std::size_t>(rec, "K") || flat.empty())
      fail(ErrorCode::CorruptFile, "pair count mismatch in task " + std::to_string(t.id));
    for (const auto& f : flat) {
      if (static_cast<int>(f.size()) != 2 * cells) fail(ErrorCode::CorruptFile, "wrong cell count in task " + std::to_string(t.id));
      IoPair p;
      p.input = state_from_cells({f.begin(), f.begin() + cells}, space);
      p.output = state_from_cells({f.begin() + cells, f.end()}, space);
      t.pairs.push_back(std::move(p));
    }
    const std::string gold = rec.value("gold", std::string());
    if (!gold.empty()) {
      try {
        t.gold = parse_program(gold);
      } catch (const Error& e) {
        fail(ErrorCode::CorruptFile, "bad gold program in task " + std::to_string(t.id) + ": " + e.what());
      }
    }
    pool.weights.push_back(rec.value("weight", 0.0));
    pool.tasks.push_back(std::move(t));
  }
  if (pool.size() != count) fail(ErrorCode::CorruptFile, "pool is truncated: header promises " + std::to_string(count) + " tasks");
  return pool;
}

void save_pool(const std::string& path, const TaskPool& pool) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_pool(out, pool);
  if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

TaskPool load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  return read_pool(in);
}

std::string describe_pool(const TaskPool& pool) {
  std::ostringstream os;
  os << "pool: " << pool.size() << " tasks\n"
     << "registers: " << pool.config.num_registers << "\n"
     << "ram: " << (pool.config.ram_enabled ? "on" : "off") << "\n"
     << "pairs per task: " << pool.config.pairs_per_task << "\n"
     << "program length: " << pool.config.program_length << "\n"
     << "weight histogram:\n";
  std::map<long, std::size_t> hist;
  for (double w : pool.weights) ++hist[std::lround(w)];
  for (const auto& [w, c] : hist) os << "  " << w << ": " << c << "\n";
  return os.str();
}

}  // namespace autoasm

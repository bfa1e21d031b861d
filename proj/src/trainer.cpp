#include "trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "error.hpp"
#include "mcts.hpp"
#include "nn/checkpoint.hpp"

namespace autoasm {

using nlohmann::json;

void TrainConfig::validate() const {
  if (temperatures.empty()) fail(ErrorCode::InvalidArgument, "at least one temperature is required");
  for (double t : temperatures)
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorCode::InvalidArgument, "temperatures must be finite and > 0");
  if (batch_size < 1 || epochs < 0 || max_episode_length < 1 || pretrain_epochs < 0 || pretrain_batch < 1)
    fail(ErrorCode::InvalidArgument, "batch sizes and episode length must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::InvalidArgument, "gamma must be in (0, 1]");
  if (lambda0 < 0.0 || lambda_decay < 0.0) fail(ErrorCode::InvalidArgument, "lambda schedule must be non-negative");
  if (policy_lr < 0.0 || value_lr < 0.0 || pretrain_lr < 0.0)
    fail(ErrorCode::InvalidArgument, "learning rates must be >= 0");
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
    fail(ErrorCode::InvalidArgument, "holdout fraction must be in [0, 1)");
  if (weights.w_max <= 0.0) fail(ErrorCode::InvalidArgument, "w_max must be > 0");
  if (jobs < 1) fail(ErrorCode::InvalidArgument, "jobs must be >= 1");
}

double TrainConfig::lambda_at(int epoch) const { return lambda0 * std::pow(lambda_decay, epoch); }

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "temperatures") c.temperatures = v.get<std::vector<double>>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "max_episode_length") c.max_episode_length = v.get<int>();
      else if (key == "lambda0") c.lambda0 = v.get<double>();
      else if (key == "lambda_decay") c.lambda_decay = v.get<double>();
      else if (key == "pg_form") {
        const auto s = v.get<std::string>();
        if (s == "episode") c.pg_form = nn::PgForm::Episode;
        else if (s == "per_step") c.pg_form = nn::PgForm::PerStep;
        else fail(ErrorCode::InvalidArgument, "pg_form must be 'episode' or 'per_step'");
      }
      else if (key == "policy_lr") c.policy_lr = v.get<double>();
      else if (key == "value_lr") c.value_lr = v.get<double>();
      else if (key == "pretrain_epochs") c.pretrain_epochs = v.get<int>();
      else if (key == "pretrain_batch") c.pretrain_batch = v.get<int>();
      else if (key == "pretrain_lr") c.pretrain_lr = v.get<double>();
      else if (key == "holdout_fraction") c.holdout_fraction = v.get<double>();
      else if (key == "pretrain_augment") c.pretrain_augment = v.get<bool>();
      else if (key == "plateau_window") c.plateau_window = v.get<int>();
      else if (key == "plateau_delta") c.plateau_delta = v.get<double>();
      else if (key == "w_max") c.weights.w_max = v.get<double>();
      else if (key == "literal_alg1_sign") c.weights.literal_alg1_sign = v.get<bool>();
      else if (key == "d_emb") c.d_emb = v.get<int>();
      else if (key == "hidden") c.hidden = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "deterministic") c.deterministic = v.get<bool>();
      else if (key == "jobs") c.jobs = v.get<int>();
      else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return train_config_from_json(ss.str());
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"temperatures", c.temperatures},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"gamma", c.gamma},
            {"max_episode_length", c.max_episode_length},
            {"lambda0", c.lambda0},
            {"lambda_decay", c.lambda_decay},
            {"pg_form", c.pg_form == nn::PgForm::Episode ? "episode" : "per_step"},
            {"policy_lr", c.policy_lr},
            {"value_lr", c.value_lr},
            {"pretrain_epochs", c.pretrain_epochs},
            {"pretrain_batch", c.pretrain_batch},
            {"pretrain_lr", c.pretrain_lr},
            {"holdout_fraction", c.holdout_fraction},
            {"pretrain_augment", c.pretrain_augment},
            {"plateau_window", c.plateau_window},
            {"plateau_delta", c.plateau_delta},
            {"w_max", c.weights.w_max},
            {"literal_alg1_sign", c.weights.literal_alg1_sign},
            {"d_emb", c.d_emb},
            {"hidden", c.hidden},
            {"seed", c.seed},
            {"deterministic", c.deterministic},
            {"jobs", c.jobs}};
  return j.dump(2);
}

nn::NetConfig net_config_for(const PilotConfig& pool_config, const TrainConfig& config) {
  nn::NetConfig c;
  c.d_emb = config.d_emb;
  c.hidden = config.hidden;
  c.pairs = pool_config.pairs_per_task;
  c.space = pool_config.space();
  return c;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<MachineState> inputs_of(const Task& t) {
  std::vector<MachineState> v;
  for (const auto& p : t.pairs) v.push_back(p.input);
  return v;
}

std::vector<MachineState> outputs_of(const Task& t) {
  std::vector<MachineState> v;
  for (const auto& p : t.pairs) v.push_back(p.output);
  return v;
}

bool all_equal(const std::vector<MachineState>& a, const std::vector<MachineState>& b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!state_equals(a[k], b[k])) return false;
  return true;
}

std::vector<MachineState> apply_line(const std::vector<MachineState>& states, const Instruction& instr) {
  std::vector<MachineState> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(step(s, instr));
  return out;
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, bool deterministic, Fn&& fn) {
  const std::size_t workers = deterministic ? 1 : std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : threads) t.join();
}

void add_scaled(nn::PolicyParams& into, nn::PolicyParams& from, double scale) {
  auto dst = nn::tensors_of(into);
  auto src = nn::tensors_of(from);
  for (std::size_t i = 0; i < dst.size(); ++i)
    for (std::size_t j = 0; j < dst[i]->size(); ++j) dst[i]->data[j] += scale * src[i]->data[j];
}

}  // namespace

std::vector<nn::ImitationExample> unroll_gold(const Task& task, const SpaceConfig& space, int pairs) {
  if (!task.gold) fail(ErrorCode::MissingGold, "task " + std::to_string(task.id) + " has no gold program");
  std::vector<nn::ImitationExample> out;
  std::vector<MachineState> states = inputs_of(task);
  const std::vector<MachineState> targets = outputs_of(task);
  for (const Instruction& instr : *task.gold) {
    out.push_back({encode_for_network(states, targets, space, pairs), instr});
    states = apply_line(states, instr);
  }
  return out;
}

Task relabel_task(const Task& task, std::span<const int> perm, std::span<const std::size_t> order) {
  if (order.size() != task.pairs.size()) fail(ErrorCode::InvalidArgument, "pair order has the wrong length");
  auto reg = [&](Register r) {
    const auto i = static_cast<std::size_t>(r);
    if (i >= perm.size()) fail(ErrorCode::InvalidArgument, "register permutation is too short");
    return static_cast<Register>(perm[i]);
  };
  auto state = [&](const MachineState& s) {
    MachineState out = s;
    for (std::size_t r = 0; r < perm.size(); ++r) out.regs[static_cast<std::size_t>(perm[r])] = s.regs[r];
    return out;
  };
  auto operand = [&](const Operand& o) { return o.is_reg() ? Operand::reg(reg(o.reg())) : o; };
  Task out;
  out.id = task.id;
  for (std::size_t k : order) out.pairs.push_back({state(task.pairs.at(k).input), state(task.pairs.at(k).output)});
  if (task.gold) {
    Program g;
    for (const auto& i : *task.gold) g.push_back({i.opcode, operand(i.src), operand(i.dst)});
    out.gold = std::move(g);
  }
  return out;
}

bool completable(const std::vector<MachineState>& states, const std::vector<MachineState>& targets,
                 const ActionSpace& space, int remaining) {
  if (all_equal(states, targets)) return true;
  if (remaining <= 0) return false;
  for (const auto& a : space.actions()) {
    const auto next = apply_line(states, a);
    if (all_equal(next, targets)) return true;
    if (remaining >= 2 && completable(next, targets, space, 1)) return true;
  }
  return false;
}

ImitationReport pretrain_imitation(nn::PolicyNet& policy, const TaskPool& pool, const TrainConfig& config) {
  config.validate();
  for (const auto& t : pool.tasks)
    if (!t.gold || t.gold->empty())
      fail(ErrorCode::MissingGold, "task " + std::to_string(t.id) + " has no gold program to imitate");
  const SpaceConfig space = policy.config.space;
  const int pairs = policy.config.pairs;

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(config.seed, {0x5b117});
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_hold = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(pool.size())));
  if (pool.size() < 2) n_hold = 0;

  std::vector<nn::ImitationExample> train;
  struct Held {
    std::size_t task;
    std::size_t line;
  };
  std::vector<Held> held;
  std::vector<std::size_t> train_tasks;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Task& t = pool.tasks[order[i]];
    if (i < n_hold) {
      for (std::size_t l = 0; l < t.gold->size(); ++l) held.push_back({order[i], l});
    } else {
      train_tasks.push_back(order[i]);
      auto ex = unroll_gold(t, space, pairs);
      train.insert(train.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
  }
  Rng augment_rng(config.seed, {0xa5a5});
  // Fresh register relabelling and pair order for every training task.
  auto augment = [&] {
    train.clear();
    std::vector<int> perm(static_cast<std::size_t>(space.num_registers));
    for (std::size_t t : train_tasks) {
      const Task& task = pool.tasks[t];
      for (std::size_t r = 0; r < perm.size(); ++r) perm[r] = static_cast<int>(r);
      std::shuffle(perm.begin(), perm.end(), augment_rng);
      std::vector<std::size_t> pair_order(task.pairs.size());
      for (std::size_t k = 0; k < pair_order.size(); ++k) pair_order[k] = k;
      std::shuffle(pair_order.begin(), pair_order.end(), augment_rng);
      auto ex = unroll_gold(relabel_task(task, perm, pair_order), space, pairs);
      train.insert(train.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
    }
  };

  ImitationReport report;
  report.train_examples = train.size();
  report.holdout_examples = held.size();

  const ActionSpace actions(space);
  // Greedy next-line accuracy on the withheld tasks: {exact, next-line}.
  auto evaluate_holdout = [&]() -> std::pair<double, double> {
    if (held.empty()) return {0.0, 0.0};
    std::size_t exact = 0, semantic = 0;
    for (const Held& h : held) {
      const Task& t = pool.tasks[h.task];
      const auto targets = outputs_of(t);
      std::vector<MachineState> states = inputs_of(t);
      for (std::size_t l = 0; l < h.line; ++l) states = apply_line(states, (*t.gold)[l]);
      const auto enc = encode_for_network(states, targets, space, pairs);
      const auto ctx = nn::encoder_forward(policy.params.enc, policy.config, enc).context();
      const Instruction pred = nn::greedy_action(policy, ctx).instr;
      const Instruction& gold = (*t.gold)[h.line];
      if (pred == gold) ++exact;
      const int remaining = static_cast<int>(t.gold->size() - h.line - 1);
      const auto after = apply_line(states, pred);
      bool ok = pred == gold || all_equal(after, apply_line(states, gold));
      if (!ok) ok = completable(after, targets, actions, std::min(remaining, 2));
      if (ok) ++semantic;
    }
    const double n = static_cast<double>(held.size());
    return {static_cast<double>(exact) / n, static_cast<double>(semantic) / n};
  };

  nn::Adam opt({config.pretrain_lr});
  Rng rng(config.seed, {0x9e7a});
  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t bs = static_cast<std::size_t>(config.pretrain_batch);
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    if (config.pretrain_augment && epoch > 0) augment();
    std::shuffle(idx.begin(), idx.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < idx.size(); start += bs) {
      std::vector<nn::ImitationExample> batch;
      for (std::size_t i = start; i < std::min(idx.size(), start + bs); ++i) batch.push_back(train[idx[i]]);
      auto loss = nn::loss_imitation(policy, batch);
      opt.step(nn::tensors_of(policy.params), nn::tensors_of(loss.grad));
      total += loss.value;
      ++batches;
    }
    report.epoch_losses.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    if (!held.empty()) report.epoch_holdout_accuracy.push_back(evaluate_holdout().second);
  }
  if (!train.empty()) {
    // Loss of the final parameters over the whole training split.
    double total = 0.0;
    for (std::size_t start = 0; start < train.size(); start += 256) {
      const std::size_t end = std::min(train.size(), start + 256);
      std::span<const nn::ImitationExample> chunk(train.data() + start, end - start);
      total += nn::loss_imitation(policy, chunk).value * static_cast<double>(chunk.size());
    }
    report.final_train_loss = total / static_cast<double>(train.size());
  }

  {
    const auto [exact, semantic] = evaluate_holdout();
    report.holdout_exact_accuracy = exact;
    report.holdout_next_line_accuracy = semantic;
  }
  return report;
}

// ---------------------------------------------------------------------------

Episode run_episode(const nn::PolicyNet& policy, const Task& task, double tau, double gamma, int max_len, Rng& rng) {
  Episode ep;
  ep.task_id = task.id;
  ep.temperature = tau;
  std::vector<MachineState> states = inputs_of(task);
  const std::vector<MachineState> targets = outputs_of(task);
  if (all_equal(states, targets)) {
    ep.success = true;
    return ep;
  }
  for (int t = 0; t < max_len; ++t) {
    auto enc = encode_for_network(states, targets, policy.config.space, policy.config.pairs);
    const auto ctx = nn::encoder_forward(policy.params.enc, policy.config, enc).context();
    const auto a = nn::sample_action(policy, ctx, tau, rng);
    ep.steps.push_back({std::move(enc), a.instr, 0.0});
    states = apply_line(states, a.instr);
    if (all_equal(states, targets)) {
      ep.success = true;
      break;
    }
  }
  if (ep.success) {
    const std::size_t T = ep.steps.size();
    for (std::size_t t = 0; t < T; ++t) ep.steps[t].reward = std::pow(gamma, static_cast<double>(T - 1 - t));
  }
  return ep;
}

std::vector<Episode> collect_episodes(const nn::PolicyNet& policy, TaskPool& pool,
                                      const std::vector<std::size_t>& task_indices, const TrainConfig& config,
                                      std::uint64_t stream) {
  const std::size_t m = config.temperatures.size();
  std::vector<Episode> episodes(task_indices.size() * m);
  parallel_for(episodes.size(), config.jobs, config.deterministic, [&](std::size_t i) {
    const std::size_t task_slot = i / m, temp = i % m;
    Rng rng(config.seed, {stream, task_slot, temp});
    episodes[i] = run_episode(policy, pool.tasks[task_indices[task_slot]], config.temperatures[temp], config.gamma,
                              config.max_episode_length, rng);
  });
  for (const Episode& ep : episodes) update_weight(pool, ep.task_id, ep.success, config.weights);
  return episodes;
}

Learner::Learner(nn::PolicyNet p, nn::ValueNet v, const TrainConfig& config)
    : policy(std::move(p)), value(std::move(v)), policy_opt({config.policy_lr}), value_opt({config.value_lr}) {}

EpochMetrics train_epoch(Learner& learner, TaskPool& pool, const TrainConfig& config, int epoch) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  EpochMetrics m;
  m.epoch = epoch;
  m.lambda = config.lambda_at(epoch);

  Rng batch_rng(config.seed, {0xba7c4, static_cast<std::uint64_t>(epoch)});
  const auto indices = sample_batch(pool, static_cast<std::size_t>(config.batch_size), batch_rng);
  const auto episodes = collect_episodes(learner.policy, pool, indices, config,
                                         0xc011ec7ULL + static_cast<std::uint64_t>(epoch));

  std::size_t successes = 0, total_len = 0;
  std::vector<nn::Trajectory> trajectories;
  std::vector<nn::ValueExample> value_batch;
  for (const Episode& ep : episodes) {
    successes += ep.success ? 1 : 0;
    total_len += ep.steps.size();
    nn::Trajectory tr;
    for (const auto& s : ep.steps) {
      tr.states.push_back(s.enc);
      tr.actions.push_back(s.action);
      tr.returns.push_back(s.reward);
      value_batch.push_back({s.enc, s.reward});
    }
    trajectories.push_back(std::move(tr));
  }
  m.success_rate = episodes.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(episodes.size());
  m.mean_episode_length =
      episodes.empty() ? 0.0 : static_cast<double>(total_len) / static_cast<double>(episodes.size());

  std::vector<nn::ImitationExample> imitation;
  for (std::size_t i : indices) {
    const Task& t = pool.tasks[i];
    if (!t.gold) continue;
    auto ex = unroll_gold(t, learner.policy.config.space, learner.policy.config.pairs);
    imitation.insert(imitation.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }

  // L_hybrid = L_rl + lambda * L_im, evaluated as two passes so both parts
  // can be reported.
  auto rl = nn::weighted_nll(learner.policy, nn::policy_gradient_terms(trajectories, config.pg_form));
  auto im = nn::weighted_nll(learner.policy, nn::imitation_terms(imitation));
  m.loss_rl = rl.value;
  m.loss_im = im.value;
  add_scaled(rl.grad, im.grad, m.lambda);
  learner.policy_opt.set_learning_rate(config.policy_lr);
  learner.policy_opt.step(nn::tensors_of(learner.policy.params), nn::tensors_of(rl.grad));

  auto vl = nn::loss_value(learner.value, value_batch);
  m.loss_value = vl.value;
  learner.value_opt.set_learning_rate(config.value_lr);
  learner.value_opt.step(nn::tensors_of(learner.value.params), nn::tensors_of(vl.grad));

  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::string metrics_row(const EpochMetrics& m, bool deterministic) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f", m.epoch, m.lambda, m.success_rate,
                m.mean_episode_length, m.loss_im, m.loss_rl, m.loss_value, deterministic ? 0.0 : m.wall_seconds);
  return buf;
}

TrainingSummary run_training(Learner& learner, TaskPool& pool, const TrainConfig& config, const std::string& out_dir,
                             const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) fail(ErrorCode::Io, "cannot write metrics.csv in '" + out_dir + "'");
  csv << kMetricsHeader << '\n';

  TrainingSummary summary;
  double best = -1.0;
  int best_epoch = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochMetrics m = train_epoch(learner, pool, config, epoch);
    summary.history.push_back(m);
    summary.epochs_run = epoch + 1;
    csv << metrics_row(m, config.deterministic) << '\n' << std::flush;
    nn::save_policy(learner.policy, (dir / "policy.ckpt").string());
    nn::save_value(learner.value, (dir / "value.ckpt").string());
    if (on_epoch) on_epoch(m);

    if (m.success_rate > best + config.plateau_delta) {
      best = m.success_rate;
      best_epoch = epoch;
    } else if (epoch - best_epoch >= config.plateau_window) {
      summary.plateaued = true;
      break;
    }
  }
  if (!csv) fail(ErrorCode::Io, "write to metrics.csv failed");
  return summary;
}

TrainingSummary run_training(const TrainConfig& config, const std::string& pool_path, const std::string& out_dir) {
  TaskPool pool = load_pool(pool_path);
  const nn::NetConfig net = net_config_for(pool.config, config);
  Learner learner(nn::PolicyNet::create(net, derive_seed(config.seed, {1})),
                  nn::ValueNet::create(net, derive_seed(config.seed, {2})), config);
  return run_training(learner, pool, config, out_dir);
}

}  // namespace autoasm

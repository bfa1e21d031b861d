#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nn/adam.hpp"
#include "nn/losses.hpp"
#include "nn/network.hpp"
#include "taskgen.hpp"

namespace autoasm {

struct TrainConfig {
  // Multi-temperature collection.
  std::vector<double> temperatures{0.5, 1.0, 2.0};
  int batch_size = 64;
  int epochs = 200;
  double gamma = 0.9;
  int max_episode_length = 12;

  // Hybrid objective weight: lambda(e) = lambda0 * lambda_decay^e.
  double lambda0 = 1.0;
  double lambda_decay = 0.95;
  nn::PgForm pg_form = nn::PgForm::Episode;

  double policy_lr = 1e-3;
  double value_lr = 1e-3;

  // Imitation pretraining.
  int pretrain_epochs = 30;
  int pretrain_batch = 32;
  double pretrain_lr = 1e-3;
  double holdout_fraction = 0.1;
  // Relabel registers and reorder pairs at random each pretraining epoch.
  bool pretrain_augment = false;

  // Stop when the success rate has not improved by more than plateau_delta
  // for plateau_window epochs.
  int plateau_window = 20;
  double plateau_delta = 0.005;

  WeightRule weights;
  int d_emb = 16;
  int hidden = 128;
  std::uint64_t seed = 0;
  bool deterministic = false;
  int jobs = 1;

  void validate() const;
  double lambda_at(int epoch) const;
};

/// Every field is optional; unknown keys are rejected with InvalidArgument.
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& config);

nn::NetConfig net_config_for(const PilotConfig& pool_config, const TrainConfig& config);

// ---------------------------------------------------------------------------

/// (state before line t, gold line t) for every line of the gold program.
std::vector<nn::ImitationExample> unroll_gold(const Task& task, const SpaceConfig& space, int pairs);

/// The same task with register r renamed to perm[r] in its states and gold
/// program, and its pairs listed in `order`.
Task relabel_task(const Task& task, std::span<const int> perm, std::span<const std::size_t> order);

/// True when `remaining` more lines can take `states` to `targets`. Searched
/// exhaustively up to two lines; beyond that only 0..2-line completions are
/// tried, so the answer may be a false negative.
bool completable(const std::vector<MachineState>& states, const std::vector<MachineState>& targets,
                 const ActionSpace& space, int remaining);

struct ImitationReport {
  double final_train_loss = 0.0;
  double holdout_exact_accuracy = 0.0;      // predicted line == gold line
  double holdout_next_line_accuracy = 0.0;  // predicted line still completes the task
  std::size_t train_examples = 0;
  std::size_t holdout_examples = 0;
  std::vector<double> epoch_losses;
  std::vector<double> epoch_holdout_accuracy;  // next-line accuracy after each epoch
};

/// Supervised training on unrolled gold programs with a withheld split of the
/// tasks for accuracy reporting.
ImitationReport pretrain_imitation(nn::PolicyNet& policy, const TaskPool& pool, const TrainConfig& config);

struct EpisodeStep {
  nn::StateEncoding enc;
  Instruction action;
  double reward = 0.0;
};

struct Episode {
  std::int64_t task_id = 0;
  std::vector<EpisodeStep> steps;
  bool success = false;
  double temperature = 1.0;
};

/// Rolls the policy on one task at temperature `tau` until every pair matches
/// or `max_len` lines were emitted. Rewards are gamma^(T-t) on success, 0
/// otherwise.
Episode run_episode(const nn::PolicyNet& policy, const Task& task, double tau, double gamma, int max_len, Rng& rng);

/// One episode per (task, temperature). Each episode's outcome is fed to
/// update_weight in collection order.
std::vector<Episode> collect_episodes(const nn::PolicyNet& policy, TaskPool& pool,
                                      const std::vector<std::size_t>& task_indices, const TrainConfig& config,
                                      std::uint64_t stream);

struct EpochMetrics {
  int epoch = 0;
  double lambda = 0.0;
  double success_rate = 0.0;
  double mean_episode_length = 0.0;
  double loss_im = 0.0;
  double loss_rl = 0.0;
  double loss_value = 0.0;
  double wall_seconds = 0.0;
};

struct Learner {
  nn::PolicyNet policy;
  nn::ValueNet value;
  nn::Adam policy_opt;
  nn::Adam value_opt;

  Learner(nn::PolicyNet p, nn::ValueNet v, const TrainConfig& config);
};

EpochMetrics train_epoch(Learner& learner, TaskPool& pool, const TrainConfig& config, int epoch);

inline constexpr const char* kMetricsHeader =
    "epoch,lambda,success_rate,mean_ep_len,loss_im,loss_rl,loss_value,wall_s";
std::string metrics_row(const EpochMetrics& m, bool deterministic);

struct TrainingSummary {
  int epochs_run = 0;
  bool plateaued = false;
  std::vector<EpochMetrics> history;
};

/// Epoch loop with per-epoch checkpoints (policy.ckpt, value.ckpt) and
/// metrics.csv under `out_dir`.
TrainingSummary run_training(Learner& learner, TaskPool& pool, const TrainConfig& config, const std::string& out_dir,
                             const std::function<void(const EpochMetrics&)>& on_epoch = {});

TrainingSummary run_training(const TrainConfig& config, const std::string& pool_path, const std::string& out_dir);

}  // namespace autoasm

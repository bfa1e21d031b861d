#pragma once

#include <span>
#include <vector>

#include "nn/network.hpp"

namespace autoasm::nn {

/// One decoded line and the weight its negative log-likelihood carries.
struct WeightedAction {
  StateEncoding enc;
  Tokens tokens{};
  double weight = 1.0;
};

struct PolicyLoss {
  double value = 0.0;
  PolicyParams grad;
};

struct ValueLoss {
  double value = 0.0;
  ValueParams grad;
};

/// sum_i weight_i * -log pi(tokens_i | enc_i), with gradients. Every other
/// policy loss reduces to this.
PolicyLoss weighted_nll(const PolicyNet& net, std::span<const WeightedAction> batch);

struct ImitationExample {
  StateEncoding enc;
  Instruction action;
};

/// Mean negative log-likelihood of the gold line, summed over the 3 slots.
PolicyLoss loss_imitation(const PolicyNet& net, std::span<const ImitationExample> batch);

struct Trajectory {
  std::vector<StateEncoding> states;
  std::vector<Instruction> actions;
  std::vector<double> returns;  // gamma^(T-t) r(s_T), one per step
};

enum class PgForm {
  // (sum_t returns_t) * (sum_t log pi(a_t | s_t)) per trajectory.
  Episode,
  // sum_t returns_t * log pi(a_t | s_t).
  PerStep,
};

/// Negative mean over trajectories of the return-weighted log-likelihood.
PolicyLoss loss_policy_gradient(const PolicyNet& net, std::span<const Trajectory> trajectories,
                                PgForm form = PgForm::Episode);

/// L_rl + lambda * L_im.
PolicyLoss loss_hybrid(const PolicyNet& net, std::span<const Trajectory> rl, std::span<const ImitationExample> im,
                       double lambda, PgForm form = PgForm::Episode);

struct ValueExample {
  StateEncoding enc;
  double target = 0.0;
};

/// Mean squared error between targets and V(s).
ValueLoss loss_value(const ValueNet& net, std::span<const ValueExample> batch);

// The weighted batches the losses above build; exposed so callers can merge
// several objectives into a single backward pass.
std::vector<WeightedAction> imitation_terms(std::span<const ImitationExample> batch, double scale = 1.0);
std::vector<WeightedAction> policy_gradient_terms(std::span<const Trajectory> trajectories, PgForm form,
                                                  double scale = 1.0);

}  // namespace autoasm::nn

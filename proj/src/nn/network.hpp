#pragma once

// Policy and value networks.
//
// Both share the task-encoder shape: every observed cell of every
// (current, target) pair is a token in a 258-symbol integer vocabulary, the
// token embeddings are concatenated, and five tanh fully-connected layers
// produce a context vector. The policy decodes one instruction as three
// tokens (opcode, src, dst) with a GRU cell unrolled three times; each slot's
// softmax is restricted to the tokens that are legal given the earlier slots.
// The value head is one more fully-connected layer and a sigmoid.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "machine.hpp"
#include "nn/tensor.hpp"
#include "rng.hpp"

namespace autoasm::nn {

inline constexpr int kStateVocab = 258;
inline constexpr int kLowBucket = 256;
inline constexpr int kHighBucket = 257;
inline constexpr int kEncoderLayers = 5;
inline constexpr int kSlots = 3;
inline constexpr int kStartToken = vocab::kSize;  // decoder input before slot 0

struct NetConfig {
  int d_emb = 16;
  int hidden = 128;
  int pairs = 2;  // K
  SpaceConfig space;

  int cells() const { return space.cells(); }
  int tokens() const { return pairs * 2 * cells(); }
  int input_width() const { return tokens() * d_emb; }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct StateEncoding {
  std::vector<int> ids;
};

int value_token(std::int32_t v);

/// Pair-major, current state before target, cells in display order.
StateEncoding encode_state(std::span<const MachineState> current, std::span<const MachineState> target,
                           const SpaceConfig& space);

using TokenMask = std::array<bool, vocab::kSize>;
using Logits = std::array<double, vocab::kSize>;
using Tokens = std::array<int, kSlots>;

Tokens action_tokens(const Instruction& instr);
Instruction instruction_from_tokens(const Tokens& t);

struct EncoderParams {
  Tensor emb;                                // kStateVocab x d_emb
  std::array<Tensor, kEncoderLayers> w, b;   // w[0]: hidden x input_width

  template <class F>
  void visit(F&& f) {
    f(emb);
    for (int l = 0; l < kEncoderLayers; ++l) {
      f(w[l]);
      f(b[l]);
    }
  }
};

struct PolicyParams {
  EncoderParams enc;
  Tensor dec_emb;              // (vocab + start) x d_emb
  Tensor wz, uz, bz;           // update gate
  Tensor wr, ur, br;           // reset gate
  Tensor wn, un, bn, bun;      // candidate
  Tensor out_w, out_b;         // vocab x hidden

  template <class F>
  void visit(F&& f) {
    enc.visit(f);
    for (Tensor* t : {&dec_emb, &wz, &uz, &bz, &wr, &ur, &br, &wn, &un, &bn, &bun, &out_w, &out_b}) f(*t);
  }
};

struct ValueParams {
  EncoderParams enc;
  Tensor head_w, head_b;  // 1 x hidden, 1

  template <class F>
  void visit(F&& f) {
    enc.visit(f);
    f(head_w);
    f(head_b);
  }
};

template <class P>
std::vector<Tensor*> tensors_of(P& params) {
  std::vector<Tensor*> out;
  params.visit([&](Tensor& t) { out.push_back(&t); });
  return out;
}

template <class P>
std::size_t parameter_count(const P& params) {
  std::size_t n = 0;
  const_cast<P&>(params).visit([&](Tensor& t) { n += t.size(); });
  return n;
}

/// Same shapes as `params`, all zeros.
template <class P>
P zeros_like(const P& params) {
  P z = params;
  z.visit([](Tensor& t) { t.zero(); });
  return z;
}

struct PolicyNet {
  NetConfig config;
  PolicyParams params;

  static PolicyNet create(const NetConfig& config, std::uint64_t seed);
};

struct ValueNet {
  NetConfig config;
  ValueParams params;

  /// The output layer starts at zero, so a fresh net predicts exactly 0.5.
  static ValueNet create(const NetConfig& config, std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Forward passes.

struct EncoderTrace {
  std::vector<int> ids;
  std::vector<double> input;
  std::array<std::vector<double>, kEncoderLayers> act;

  const std::vector<double>& context() const { return act.back(); }
};

EncoderTrace encoder_forward(const EncoderParams& p, const NetConfig& config, const StateEncoding& enc);
void encoder_backward(const EncoderParams& p, const EncoderTrace& tr, std::vector<double> d_out, EncoderParams& grad);

struct GruTrace {
  int input_token = kStartToken;
  std::vector<double> h_prev, z, r, n, hn, h;
};

/// One decoder step: consumes `input_token` and `h_prev`, fills the new
/// hidden state and the raw (unmasked) slot logits.
void decoder_step(const PolicyParams& p, int input_token, std::span<const double> h_prev, GruTrace& tr,
                  Logits& logits);

/// Probabilities over legal tokens of logits / tau; masked tokens get 0.
std::array<double, vocab::kSize> masked_softmax(const Logits& logits, const TokenMask& mask, double tau = 1.0);
double masked_log_softmax(const Logits& logits, const TokenMask& mask, int token);
double entropy(std::span<const double> probs);

struct PolicyDistributions {
  Tokens tokens{};  // tokens the later slots were conditioned on
  std::array<std::array<double, vocab::kSize>, kSlots> probs{};
  std::array<TokenMask, kSlots> masks{};
};

/// Three masked distributions. Slots 1 and 2 are conditioned on `prefix`
/// when given, otherwise on the most likely earlier tokens.
PolicyDistributions policy_forward(const PolicyNet& net, const StateEncoding& enc,
                                   const Tokens* prefix = nullptr);

struct SampledAction {
  Instruction instr{Opcode::Movl, Operand::imm(0), Operand::reg(Register::Eax)};
  Tokens tokens{};
  double log_prob = 0.0;  // under the untempered (tau = 1) policy
};

/// Samples the three slots in order from logits / tau. Tiny tau approaches
/// argmax decoding.
SampledAction sample_action(const PolicyNet& net, std::span<const double> context, double tau, Rng& rng);
SampledAction greedy_action(const PolicyNet& net, std::span<const double> context);

/// pi(a | s) for every action of `space`, indexed like ActionSpace.
std::vector<double> action_probabilities(const PolicyNet& net, std::span<const double> context,
                                         const ActionSpace& space);

double value_forward(const ValueNet& net, const StateEncoding& enc);

}  // namespace autoasm::nn

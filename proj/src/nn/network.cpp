#include "nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace autoasm::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void xavier(Tensor& t, Rng& rng) {
  const double fan_in = static_cast<double>(t.cols());
  const double fan_out = static_cast<double>(t.rows());
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * limit;
}

void uniform_fill(Tensor& t, double limit, Rng& rng) {
  for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * limit;
}

// Row id holds value id - 128 (the two end rows are the clamp buckets).
// Column 0 is linear in the value, then sin/cos pairs with periods from 4 to
// 512; any leftover column is random.
void numeric_fill(Tensor& t, Rng& rng) {
  const std::size_t d = t.cols();
  const double pi = std::acos(-1.0);
  for (std::size_t id = 0; id < t.rows(); ++id) {
    const double v = id == static_cast<std::size_t>(kLowBucket)    ? -129.0
                     : id == static_cast<std::size_t>(kHighBucket) ? 128.0
                                                                    : static_cast<double>(id) - 128.0;
    double* row = t.row(id);
    row[0] = v / 16.0;
    const std::size_t pairs = (d - 1) / 2;
    for (std::size_t k = 0; k < pairs; ++k) {
      const double period = pairs > 1 ? 4.0 * std::pow(128.0, static_cast<double>(k) / static_cast<double>(pairs - 1)) : 16.0;
      row[1 + 2 * k] = std::sin(2.0 * pi * v / period);
      row[2 + 2 * k] = std::cos(2.0 * pi * v / period);
    }
    for (std::size_t j = 1 + 2 * pairs; j < d; ++j) row[j] = 2.0 * rng.uniform() - 1.0;
  }
}

EncoderParams make_encoder(const NetConfig& c, Rng& rng) {
  using S = std::size_t;
  EncoderParams e;
  e.emb = Tensor({S(kStateVocab), S(c.d_emb)});
  numeric_fill(e.emb, rng);
  for (int l = 0; l < kEncoderLayers; ++l) {
    const S in = l == 0 ? S(c.input_width()) : S(c.hidden);
    e.w[l] = Tensor({S(c.hidden), in});
    e.b[l] = Tensor({S(c.hidden)});
    xavier(e.w[l], rng);
  }
  return e;
}

void check_config(const NetConfig& c) {
  if (c.d_emb < 1 || c.hidden < 1 || c.pairs < 1)
    fail(ErrorCode::InvalidArgument, "network dimensions must be positive");
  if (c.space.num_registers < 1 || c.space.num_registers > kNumRegisters)
    fail(ErrorCode::InvalidArgument, "register count must be within 1..4");
}

TokenMask slot_mask(const SpaceConfig& space, int slot, const Tokens& prefix) {
  switch (slot) {
    case 0:
      return opcode_mask();
    case 1:
      return src_mask(space);
    default:
      return dst_mask(space, vocab::opcode_of(prefix[0]), vocab::operand_of(prefix[1]));
  }
}

int argmax_masked(const Logits& logits, const TokenMask& mask) {
  int best = -1;
  for (int i = 0; i < vocab::kSize; ++i)
    if (mask[i] && (best < 0 || logits[i] > logits[best])) best = i;
  return best;
}

}  // namespace

int value_token(std::int32_t v) {
  if (v < -128) return kLowBucket;
  if (v > 127) return kHighBucket;
  return v + 128;
}

StateEncoding encode_state(std::span<const MachineState> current, std::span<const MachineState> target,
                           const SpaceConfig& space) {
  if (current.size() != target.size() || current.empty())
    fail(ErrorCode::ConfigMismatch, "current and target state lists must be non-empty and equally long");
  StateEncoding enc;
  enc.ids.reserve(current.size() * 2 * space.cells());
  for (std::size_t k = 0; k < current.size(); ++k) {
    if (current[k].has_ram() != space.ram_enabled || target[k].has_ram() != space.ram_enabled)
      fail(ErrorCode::ConfigMismatch, "state RAM configuration does not match the network");
    for (const MachineState* s : {&current[k], &target[k]})
      for (std::int32_t v : cells_of(*s, space)) enc.ids.push_back(value_token(v));
  }
  return enc;
}

Tokens action_tokens(const Instruction& instr) {
  return {vocab::opcode_token(instr.opcode), vocab::operand_token(instr.src), vocab::operand_token(instr.dst)};
}

Instruction instruction_from_tokens(const Tokens& t) {
  return Instruction{vocab::opcode_of(t[0]), vocab::operand_of(t[1]), vocab::operand_of(t[2])};
}

PolicyNet PolicyNet::create(const NetConfig& c, std::uint64_t seed) {
  check_config(c);
  using S = std::size_t;
  Rng rng(seed, {0x9011c7});
  PolicyNet net;
  net.config = c;
  PolicyParams& p = net.params;
  p.enc = make_encoder(c, rng);
  const S h = S(c.hidden), d = S(c.d_emb);
  p.dec_emb = Tensor({S(vocab::kSize + 1), d});
  uniform_fill(p.dec_emb, 1.0, rng);
  for (Tensor* w : {&p.wz, &p.wr, &p.wn}) {
    *w = Tensor({h, d});
    xavier(*w, rng);
  }
  for (Tensor* u : {&p.uz, &p.ur, &p.un}) {
    *u = Tensor({h, h});
    xavier(*u, rng);
  }
  for (Tensor* b : {&p.bz, &p.br, &p.bn, &p.bun}) *b = Tensor({h});
  p.out_w = Tensor({S(vocab::kSize), h});
  xavier(p.out_w, rng);
  p.out_b = Tensor({S(vocab::kSize)});
  return net;
}

ValueNet ValueNet::create(const NetConfig& c, std::uint64_t seed) {
  check_config(c);
  Rng rng(seed, {0x7a1e});
  ValueNet net;
  net.config = c;
  net.params.enc = make_encoder(c, rng);
  net.params.head_w = Tensor({1, std::size_t(c.hidden)});
  net.params.head_b = Tensor({1});
  return net;
}

// ---------------------------------------------------------------------------

EncoderTrace encoder_forward(const EncoderParams& p, const NetConfig& c, const StateEncoding& enc) {
  if (static_cast<int>(enc.ids.size()) != c.tokens())
    fail(ErrorCode::ConfigMismatch, "encoding has " + std::to_string(enc.ids.size()) + " tokens, network expects " +
                                        std::to_string(c.tokens()));
  EncoderTrace tr;
  tr.ids = enc.ids;
  const std::size_t d = static_cast<std::size_t>(c.d_emb);
  tr.input.resize(tr.ids.size() * d);
  for (std::size_t i = 0; i < tr.ids.size(); ++i) {
    const int id = tr.ids[i];
    if (id < 0 || id >= kStateVocab) fail(ErrorCode::InvalidArgument, "state token out of range");
    std::copy_n(p.emb.row(id), d, tr.input.data() + i * d);
  }
  const std::vector<double>* x = &tr.input;
  for (int l = 0; l < kEncoderLayers; ++l) {
    auto& a = tr.act[l];
    a.resize(p.w[l].rows());
    matvec(p.w[l], x->data(), p.b[l].data.data(), a.data());
    for (double& v : a) v = std::tanh(v);
    x = &a;
  }
  return tr;
}

void encoder_backward(const EncoderParams& p, const EncoderTrace& tr, std::vector<double> d_out, EncoderParams& g) {
  std::vector<double> da = std::move(d_out);
  for (int l = kEncoderLayers - 1; l >= 0; --l) {
    const auto& a = tr.act[l];
    for (std::size_t i = 0; i < da.size(); ++i) da[i] *= 1.0 - a[i] * a[i];
    const std::vector<double>& x = l == 0 ? tr.input : tr.act[l - 1];
    outer_acc(g.w[l], da.data(), x.data());
    for (std::size_t i = 0; i < da.size(); ++i) g.b[l].data[i] += da[i];
    std::vector<double> dx(x.size(), 0.0);
    matvec_t_acc(p.w[l], da.data(), dx.data());
    da = std::move(dx);
  }
  const std::size_t d = p.emb.cols();
  for (std::size_t i = 0; i < tr.ids.size(); ++i) {
    double* row = g.emb.row(tr.ids[i]);
    for (std::size_t j = 0; j < d; ++j) row[j] += da[i * d + j];
  }
}

void decoder_step(const PolicyParams& p, int input_token, std::span<const double> h_prev, GruTrace& tr,
                  Logits& logits) {
  const std::size_t h = p.uz.rows();
  tr.input_token = input_token;
  tr.h_prev.assign(h_prev.begin(), h_prev.end());
  const double* x = p.dec_emb.row(input_token);

  std::vector<double> az(h), ar(h), an(h), tmp(h);
  tr.z.resize(h);
  tr.r.resize(h);
  tr.n.resize(h);
  tr.hn.resize(h);
  tr.h.resize(h);

  matvec(p.wz, x, p.bz.data.data(), az.data());
  matvec(p.uz, h_prev.data(), nullptr, tmp.data());
  for (std::size_t i = 0; i < h; ++i) tr.z[i] = sigmoid(az[i] + tmp[i]);

  matvec(p.wr, x, p.br.data.data(), ar.data());
  matvec(p.ur, h_prev.data(), nullptr, tmp.data());
  for (std::size_t i = 0; i < h; ++i) tr.r[i] = sigmoid(ar[i] + tmp[i]);

  matvec(p.un, h_prev.data(), p.bun.data.data(), tr.hn.data());
  matvec(p.wn, x, p.bn.data.data(), an.data());
  for (std::size_t i = 0; i < h; ++i) {
    tr.n[i] = std::tanh(an[i] + tr.r[i] * tr.hn[i]);
    tr.h[i] = (1.0 - tr.z[i]) * tr.n[i] + tr.z[i] * h_prev[i];
  }
  matvec(p.out_w, tr.h.data(), p.out_b.data.data(), logits.data());
}

std::array<double, vocab::kSize> masked_softmax(const Logits& logits, const TokenMask& mask, double tau) {
  std::array<double, vocab::kSize> p{};
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < vocab::kSize; ++i)
    if (mask[i]) mx = std::max(mx, logits[i] / tau);
  double total = 0.0;
  for (int i = 0; i < vocab::kSize; ++i)
    if (mask[i]) total += (p[i] = std::exp(logits[i] / tau - mx));
  for (double& v : p) v /= total;
  return p;
}

double masked_log_softmax(const Logits& logits, const TokenMask& mask, int token) {
  if (!mask[token]) return -std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < vocab::kSize; ++i)
    if (mask[i]) mx = std::max(mx, logits[i]);
  double total = 0.0;
  for (int i = 0; i < vocab::kSize; ++i)
    if (mask[i]) total += std::exp(logits[i] - mx);
  return logits[token] - mx - std::log(total);
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

PolicyDistributions policy_forward(const PolicyNet& net, const StateEncoding& enc, const Tokens* prefix) {
  const EncoderTrace tr = encoder_forward(net.params.enc, net.config, enc);
  PolicyDistributions out;
  std::vector<double> h = tr.context();
  int input = kStartToken;
  GruTrace g;
  Logits logits;
  for (int slot = 0; slot < kSlots; ++slot) {
    decoder_step(net.params, input, h, g, logits);
    out.masks[slot] = slot_mask(net.config.space, slot, out.tokens);
    out.probs[slot] = masked_softmax(logits, out.masks[slot]);
    out.tokens[slot] = prefix ? (*prefix)[slot] : argmax_masked(logits, out.masks[slot]);
    input = out.tokens[slot];
    h = g.h;
  }
  return out;
}

SampledAction sample_action(const PolicyNet& net, std::span<const double> context, double tau, Rng& rng) {
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorCode::InvalidArgument, "temperature must be finite and > 0");
  SampledAction out;
  std::vector<double> h(context.begin(), context.end());
  int input = kStartToken;
  GruTrace g;
  Logits logits;
  for (int slot = 0; slot < kSlots; ++slot) {
    decoder_step(net.params, input, h, g, logits);
    const TokenMask mask = slot_mask(net.config.space, slot, out.tokens);
    const auto probs = masked_softmax(logits, mask, tau);
    const int tok = static_cast<int>(rng.categorical(probs));
    out.tokens[slot] = tok;
    out.log_prob += masked_log_softmax(logits, mask, tok);
    input = tok;
    h.swap(g.h);
  }
  out.instr = instruction_from_tokens(out.tokens);
  return out;
}

SampledAction greedy_action(const PolicyNet& net, std::span<const double> context) {
  SampledAction out;
  std::vector<double> h(context.begin(), context.end());
  int input = kStartToken;
  GruTrace g;
  Logits logits;
  for (int slot = 0; slot < kSlots; ++slot) {
    decoder_step(net.params, input, h, g, logits);
    const TokenMask mask = slot_mask(net.config.space, slot, out.tokens);
    const int tok = argmax_masked(logits, mask);
    out.tokens[slot] = tok;
    out.log_prob += masked_log_softmax(logits, mask, tok);
    input = tok;
    h.swap(g.h);
  }
  out.instr = instruction_from_tokens(out.tokens);
  return out;
}

std::vector<double> action_probabilities(const PolicyNet& net, std::span<const double> context,
                                         const ActionSpace& space) {
  if (!(space.config() == net.config.space)) fail(ErrorCode::ConfigMismatch, "action space differs from network space");
  std::vector<double> probs(space.size(), 0.0);
  GruTrace g0, g1, g2;
  Logits logits;
  decoder_step(net.params, kStartToken, context, g0, logits);
  const auto p_op = masked_softmax(logits, opcode_mask());
  const TokenMask srcs = src_mask(net.config.space);
  for (int op = 0; op < kNumOpcodes; ++op) {
    const int op_tok = vocab::kOpcodeBase + op;
    decoder_step(net.params, op_tok, g0.h, g1, logits);
    const auto p_src = masked_softmax(logits, srcs);
    for (int s = 0; s < vocab::kSize; ++s) {
      if (!srcs[s]) continue;
      decoder_step(net.params, s, g1.h, g2, logits);
      const TokenMask dsts = dst_mask(net.config.space, static_cast<Opcode>(op), vocab::operand_of(s));
      const auto p_dst = masked_softmax(logits, dsts);
      for (int d = 0; d < vocab::kSize; ++d) {
        if (!dsts[d]) continue;
        const int idx = space.index_of(instruction_from_tokens({op_tok, s, d}));
        probs[idx] = p_op[op_tok] * p_src[s] * p_dst[d];
      }
    }
  }
  return probs;
}

double value_forward(const ValueNet& net, const StateEncoding& enc) {
  const EncoderTrace tr = encoder_forward(net.params.enc, net.config, enc);
  const auto& c = tr.context();
  double y = net.params.head_b.data[0];
  for (std::size_t i = 0; i < c.size(); ++i) y += net.params.head_w.data[i] * c[i];
  return sigmoid(y);
}

}  // namespace autoasm::nn

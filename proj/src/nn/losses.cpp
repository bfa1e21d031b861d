#include "nn/losses.hpp"

#include <cmath>

#include "error.hpp"

namespace autoasm::nn {

namespace {

TokenMask mask_for(const SpaceConfig& space, int slot, const Tokens& t) {
  if (slot == 0) return opcode_mask();
  if (slot == 1) return src_mask(space);
  return dst_mask(space, vocab::opcode_of(t[0]), vocab::operand_of(t[1]));
}

// Backward through one GRU step. `dh` is the gradient w.r.t. the step's
// output; returns the gradient w.r.t. h_prev.
std::vector<double> gru_backward(const PolicyParams& p, const GruTrace& tr, const std::vector<double>& dh,
                                 PolicyParams& g) {
  const std::size_t h = tr.h.size();
  std::vector<double> dh_prev(h), dan(h), daz(h), dar(h), dhn(h);
  std::vector<double> dx(p.dec_emb.cols(), 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    const double dn = dh[i] * (1.0 - tr.z[i]);
    const double dz = dh[i] * (tr.h_prev[i] - tr.n[i]);
    dh_prev[i] = dh[i] * tr.z[i];
    dan[i] = dn * (1.0 - tr.n[i] * tr.n[i]);
    const double dr = dan[i] * tr.hn[i];
    dhn[i] = dan[i] * tr.r[i];
    daz[i] = dz * tr.z[i] * (1.0 - tr.z[i]);
    dar[i] = dr * tr.r[i] * (1.0 - tr.r[i]);
  }
  const double* x = p.dec_emb.row(tr.input_token);
  const double* hp = tr.h_prev.data();

  outer_acc(g.wn, dan.data(), x);
  outer_acc(g.un, dhn.data(), hp);
  outer_acc(g.wz, daz.data(), x);
  outer_acc(g.uz, daz.data(), hp);
  outer_acc(g.wr, dar.data(), x);
  outer_acc(g.ur, dar.data(), hp);
  for (std::size_t i = 0; i < h; ++i) {
    g.bn.data[i] += dan[i];
    g.bun.data[i] += dhn[i];
    g.bz.data[i] += daz[i];
    g.br.data[i] += dar[i];
  }
  matvec_t_acc(p.un, dhn.data(), dh_prev.data());
  matvec_t_acc(p.uz, daz.data(), dh_prev.data());
  matvec_t_acc(p.ur, dar.data(), dh_prev.data());
  matvec_t_acc(p.wn, dan.data(), dx.data());
  matvec_t_acc(p.wz, daz.data(), dx.data());
  matvec_t_acc(p.wr, dar.data(), dx.data());
  double* de = g.dec_emb.row(tr.input_token);
  for (std::size_t j = 0; j < dx.size(); ++j) de[j] += dx[j];
  return dh_prev;
}

}  // namespace

PolicyLoss weighted_nll(const PolicyNet& net, std::span<const WeightedAction> batch) {
  const PolicyParams& p = net.params;
  PolicyLoss out{0.0, zeros_like(p)};
  std::array<GruTrace, kSlots> steps;
  Logits logits;
  for (const WeightedAction& ex : batch) {
    if (ex.weight == 0.0) continue;
    const EncoderTrace enc = encoder_forward(p.enc, net.config, ex.enc);

    std::array<std::array<double, vocab::kSize>, kSlots> dlogits{};
    const std::vector<double>* h = &enc.context();
    int input = kStartToken;
    for (int slot = 0; slot < kSlots; ++slot) {
      decoder_step(p, input, *h, steps[slot], logits);
      const TokenMask mask = mask_for(net.config.space, slot, ex.tokens);
      const int tok = ex.tokens[slot];
      if (!mask[tok]) fail(ErrorCode::IllegalInstruction, "target token is masked out in slot " + std::to_string(slot));
      const auto probs = masked_softmax(logits, mask);
      out.value -= ex.weight * masked_log_softmax(logits, mask, tok);
      for (int i = 0; i < vocab::kSize; ++i) dlogits[slot][i] = ex.weight * (probs[i] - (i == tok ? 1.0 : 0.0));
      input = tok;
      h = &steps[slot].h;
    }

    std::vector<double> dh(p.uz.rows(), 0.0);
    for (int slot = kSlots - 1; slot >= 0; --slot) {
      const GruTrace& tr = steps[slot];
      outer_acc(out.grad.out_w, dlogits[slot].data(), tr.h.data());
      for (int i = 0; i < vocab::kSize; ++i) out.grad.out_b.data[i] += dlogits[slot][i];
      matvec_t_acc(p.out_w, dlogits[slot].data(), dh.data());
      dh = gru_backward(p, tr, dh, out.grad);
    }
    encoder_backward(p.enc, enc, std::move(dh), out.grad.enc);
  }
  return out;
}

std::vector<WeightedAction> imitation_terms(std::span<const ImitationExample> batch, double scale) {
  std::vector<WeightedAction> terms;
  terms.reserve(batch.size());
  const double w = batch.empty() ? 0.0 : scale / static_cast<double>(batch.size());
  for (const auto& ex : batch) terms.push_back({ex.enc, action_tokens(ex.action), w});
  return terms;
}

std::vector<WeightedAction> policy_gradient_terms(std::span<const Trajectory> trajectories, PgForm form,
                                                  double scale) {
  std::vector<WeightedAction> terms;
  if (trajectories.empty()) return terms;
  const double norm = scale / static_cast<double>(trajectories.size());
  for (const Trajectory& tr : trajectories) {
    if (tr.states.size() != tr.actions.size() || tr.states.size() != tr.returns.size())
      fail(ErrorCode::ShapeMismatch, "trajectory states, actions and returns differ in length");
    double total = 0.0;
    for (double r : tr.returns) total += r;
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
      const double w = form == PgForm::Episode ? total : tr.returns[t];
      terms.push_back({tr.states[t], action_tokens(tr.actions[t]), w * norm});
    }
  }
  return terms;
}

PolicyLoss loss_imitation(const PolicyNet& net, std::span<const ImitationExample> batch) {
  const auto terms = imitation_terms(batch);
  return weighted_nll(net, terms);
}

PolicyLoss loss_policy_gradient(const PolicyNet& net, std::span<const Trajectory> trajectories, PgForm form) {
  const auto terms = policy_gradient_terms(trajectories, form);
  return weighted_nll(net, terms);
}

PolicyLoss loss_hybrid(const PolicyNet& net, std::span<const Trajectory> rl, std::span<const ImitationExample> im,
                       double lambda, PgForm form) {
  if (lambda < 0.0) fail(ErrorCode::InvalidArgument, "lambda must be >= 0");
  auto terms = policy_gradient_terms(rl, form);
  if (lambda > 0.0) {
    auto more = imitation_terms(im, lambda);
    terms.insert(terms.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  return weighted_nll(net, terms);
}

ValueLoss loss_value(const ValueNet& net, std::span<const ValueExample> batch) {
  const ValueParams& p = net.params;
  ValueLoss out{0.0, zeros_like(p)};
  if (batch.empty()) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const ValueExample& ex : batch) {
    const EncoderTrace enc = encoder_forward(p.enc, net.config, ex.enc);
    const auto& c = enc.context();
    double y = p.head_b.data[0];
    for (std::size_t i = 0; i < c.size(); ++i) y += p.head_w.data[i] * c[i];
    const double v = 1.0 / (1.0 + std::exp(-y));
    const double err = ex.target - v;
    out.value += err * err * inv;
    const double dy = -2.0 * err * inv * v * (1.0 - v);
    out.grad.head_b.data[0] += dy;
    std::vector<double> dc(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      out.grad.head_w.data[i] += dy * c[i];
      dc[i] = dy * p.head_w.data[i];
    }
    encoder_backward(p.enc, enc, std::move(dc), out.grad.enc);
  }
  return out;
}

}  // namespace autoasm::nn

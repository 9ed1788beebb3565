#include "psl/mlps/encoder.hpp"

namespace psl::mlps {

namespace {
constexpr double kLogVarMin = -8.0;
constexpr double kLogVarMax = 8.0;
}  // namespace

ContextEncoder make_context_encoder(EnvKind kind, int d_z,
                                    const std::vector<long>& hidden, Rng& rng,
                                    bool wind_full_state) {
  if (d_z <= 0) throw std::invalid_argument("encoder requires d_z > 0");
  ContextEncoder enc;
  enc.d_z = d_z;
  enc.kind = kind;
  enc.wind_full_state = wind_full_state;
  const int proj = core::projected_state_dim(kind, wind_full_state);
  const long in = 2L * proj + 2 + 1;  // proj(s), action, reward, proj(s')
  enc.net = nn::make_mlp("encoder", in, hidden, 2L * d_z, nn::Activation::Relu, rng);
  return enc;
}

ContextEncoder clone_encoder(const ContextEncoder& enc) {
  ContextEncoder copy = enc;
  copy.net.for_each_param([](nn::Param& p) {
    p.m = Mat();
    p.v = Mat();
    p.step = 0;
  });
  return copy;
}

Mat encoder_inputs(const ContextEncoder& enc, const std::vector<Transition>& batch) {
  const long n = static_cast<long>(batch.size());
  Mat in(n, enc.net.in_dim());
  for (long i = 0; i < n; ++i) {
    const Transition& t = batch[static_cast<std::size_t>(i)];
    const Vec ps = core::state_projection(t.state, enc.kind, enc.wind_full_state);
    const Vec pn = core::state_projection(t.next_state, enc.kind, enc.wind_full_state);
    long col = 0;
    in.row(i).segment(col, ps.size()) = ps.transpose();
    col += ps.size();
    in.row(i).segment(col, t.action.size()) = t.action.transpose();
    col += t.action.size();
    in(i, col++) = t.reward;
    in.row(i).segment(col, pn.size()) = pn.transpose();
  }
  return in;
}

Posterior encode_context(const ContextEncoder& enc, const std::vector<Transition>& batch) {
  Posterior post;
  if (batch.empty()) {
    post.mean = Vec::Zero(enc.d_z);
    post.var = Vec::Ones(enc.d_z);
    post.from_prior = true;
    return post;
  }
  const Mat out = nn::mlp_eval(enc.net, encoder_inputs(enc, batch));
  const Mat means = out.leftCols(enc.d_z);
  const Mat log_vars = out.rightCols(enc.d_z).array().max(kLogVarMin).min(kLogVarMax);
  const Mat precisions = (-log_vars.array()).exp();
  // Unit prior contributes precision 1 with mean 0.
  const Vec total_prec = precisions.colwise().sum().transpose().array() + 1.0;
  const Vec weighted = means.cwiseProduct(precisions).colwise().sum().transpose();
  post.var = total_prec.cwiseInverse();
  post.mean = weighted.cwiseQuotient(total_prec);
  return post;
}

Vec sample_posterior(const Posterior& p, Rng& rng) {
  return p.mean.array() +
         p.var.array().sqrt() * nn::sample_standard_normal(p.mean.size(), rng).array();
}

PosteriorNodes encode_context_tape(Tape& tape, ContextEncoder& enc,
                                   const std::vector<Transition>& batch, const Vec& noise) {
  if (batch.empty()) throw std::invalid_argument("tracked encoding needs a non-empty batch");
  Tape::Id out = nn::mlp_forward(tape, enc.net, tape.constant(encoder_inputs(enc, batch)));
  Tape::Id means = tape.slice_cols(out, 0, enc.d_z);
  Tape::Id log_vars = tape.clamp(tape.slice_cols(out, enc.d_z, enc.d_z), kLogVarMin, kLogVarMax);
  Tape::Id precisions = tape.exp_(tape.scale(log_vars, -1.0));
  Tape::Id total_prec = tape.add_scalar(tape.colsum(precisions), 1.0);
  Tape::Id weighted = tape.colsum(tape.mul(means, precisions));

  PosteriorNodes post;
  post.var = tape.reciprocal(total_prec);
  post.mean = tape.mul(weighted, post.var);
  Tape::Id std = tape.sqrt_(post.var);
  post.sample = tape.add(post.mean, tape.mul(std, tape.constant(noise.transpose())));
  return post;
}

Tape::Id kl_to_prior(Tape& tape, const PosteriorNodes& post) {
  Tape::Id mean_sq = tape.mul(post.mean, post.mean);
  Tape::Id term = tape.add_scalar(tape.sub(tape.add(mean_sq, post.var), tape.log_(post.var)), -1.0);
  return tape.scale(tape.sum(term), 0.5);
}

}  // namespace psl::mlps

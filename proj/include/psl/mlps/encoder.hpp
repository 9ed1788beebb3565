#pragma once

#include "psl/core/types.hpp"
#include "psl/nn/distributions.hpp"

namespace psl::mlps {

using core::EnvKind;
using core::Transition;
using core::Vec;
using nn::Mat;
using nn::Rng;
using nn::Tape;

// Product-of-Gaussians context encoder. The network maps one transition
// (projected state, action, reward, projected next state) to a per-factor
// Gaussian (mean, log-variance) over z; a batch's posterior combines the
// factors with the unit prior by precision addition.
struct ContextEncoder {
  nn::Mlp net;  // input_dim -> 2 * d_z (means, log-variances)
  int d_z = 2;
  EnvKind kind = EnvKind::Door;
  bool wind_full_state = false;

  int input_dim() const { return static_cast<int>(net.in_dim()); }
};

ContextEncoder make_context_encoder(EnvKind kind, int d_z,
                                    const std::vector<long>& hidden, Rng& rng,
                                    bool wind_full_state = false);

// Deep copy with fresh optimizer state (target network construction).
ContextEncoder clone_encoder(const ContextEncoder& enc);

struct Posterior {
  Vec mean;
  Vec var;
  bool from_prior = false;  // empty batch fell back to N(0, I)
};

// Encoder network input row for one transition.
Mat encoder_inputs(const ContextEncoder& enc, const std::vector<Transition>& batch);

// Tape-free posterior over a transition batch. An empty batch returns the
// prior N(0, I) flagged with from_prior.
Posterior encode_context(const ContextEncoder& enc, const std::vector<Transition>& batch);

Vec sample_posterior(const Posterior& p, Rng& rng);

// Tracked encoder pass: returns nodes for the posterior mean/variance
// (1 x d_z) and a reparameterized sample using the given noise.
struct PosteriorNodes {
  Tape::Id mean;
  Tape::Id var;
  Tape::Id sample;
};
PosteriorNodes encode_context_tape(Tape& tape, ContextEncoder& enc,
                                   const std::vector<Transition>& batch, const Vec& noise);

// 0.5 * sum(mean^2 + var - log var - 1): KL(posterior || N(0, I)).
Tape::Id kl_to_prior(Tape& tape, const PosteriorNodes& post);

}  // namespace psl::mlps

#pragma once

#include "psl/nn/mlp.hpp"

namespace psl::nn {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

// Stochastic policy head. log_std is clamped to [kLogStdMin, kLogStdMax].
struct DiagonalGaussian {
  Vec mean;
  Vec log_std;
};

struct SquashedSample {
  Vec action;       // tanh(mean + std * noise), components in (-1, 1)
  Vec pre_squash;   // mean + std * noise
  Vec noise;        // standard normal draw
  double log_prob;  // includes the tanh change-of-variables correction
};

// Reparameterized squashed-Gaussian sample (tape-free, for rollouts).
SquashedSample gaussian_policy_sample(const DiagonalGaussian& head, Rng& rng);

// Log-density of a squashed action given its pre-squash value.
double squashed_log_prob(const DiagonalGaussian& head, const Vec& pre_squash);

Vec sample_standard_normal(long n, Rng& rng);
Mat sample_standard_normal(long rows, long cols, Rng& rng);

// i.i.d. Gumbel(0,1) noise.
Mat sample_gumbel(long rows, long cols, Rng& rng);

// y = softmax((logits + g) / temperature); hard returns the one-hot of
// the argmax. Tape-free version for environment interaction.
Vec gumbel_softmax_sample(const Vec& logits, double temperature, Rng& rng, bool hard);

// Tape version: differentiable w.r.t. the logits node; hard applies the
// straight-through estimator.
Tape::Id gumbel_softmax(Tape& tape, Tape::Id logits, Tape::Id gumbel_noise,
                        double temperature, bool hard);

// Row-wise log-probability (m x 1) of tanh-squashed Gaussian samples built
// on a tape: mean/log_std are (m x d) nodes, noise a constant (m x d).
// Returns {action node, log_prob node}.
struct SquashedNodes {
  Tape::Id action;
  Tape::Id log_prob;
};
SquashedNodes squashed_gaussian(Tape& tape, Tape::Id mean, Tape::Id log_std,
                                Tape::Id noise);

}  // namespace psl::nn

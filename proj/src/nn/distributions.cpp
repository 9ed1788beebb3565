#include "psl/nn/distributions.hpp"

#include <cmath>

namespace psl::nn {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

}  // namespace

Vec sample_standard_normal(long n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Mat sample_standard_normal(long rows, long cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

Mat sample_gumbel(long rows, long cols, Rng& rng) {
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = -std::log(-std::log(u(rng)));
  return m;
}

SquashedSample gaussian_policy_sample(const DiagonalGaussian& head, Rng& rng) {
  const long d = head.mean.size();
  SquashedSample s;
  s.noise = sample_standard_normal(d, rng);
  const Vec log_std = head.log_std.array().max(kLogStdMin).min(kLogStdMax);
  s.pre_squash = head.mean.array() + log_std.array().exp() * s.noise.array();
  s.action = s.pre_squash.array().tanh();
  s.log_prob = squashed_log_prob(head, s.pre_squash);
  return s;
}

double squashed_log_prob(const DiagonalGaussian& head, const Vec& pre_squash) {
  const Vec log_std = head.log_std.array().max(kLogStdMin).min(kLogStdMax);
  const Vec std = log_std.array().exp();
  double lp = 0.0;
  for (long i = 0; i < pre_squash.size(); ++i) {
    const double xi = (pre_squash[i] - head.mean[i]) / std[i];
    const double a = std::tanh(pre_squash[i]);
    lp += -0.5 * xi * xi - 0.5 * kLogTwoPi - log_std[i] - std::log(1.0 - a * a + kSquashEps);
  }
  return lp;
}

Vec gumbel_softmax_sample(const Vec& logits, double temperature, Rng& rng, bool hard) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
  const Mat g = sample_gumbel(1, logits.size(), rng);
  Eigen::ArrayXd perturbed = (logits.transpose().array() + g.row(0).array()) / temperature;
  perturbed -= perturbed.maxCoeff();
  Eigen::ArrayXd y = perturbed.exp();
  y /= y.sum();
  if (!hard) return y.matrix().transpose();
  long j;
  y.maxCoeff(&j);
  Vec one_hot = Vec::Zero(logits.size());
  one_hot[j] = 1.0;
  return one_hot;
}

Tape::Id gumbel_softmax(Tape& tape, Tape::Id logits, Tape::Id gumbel_noise,
                        double temperature, bool hard) {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be positive");
  Tape::Id soft =
      tape.softmax_rows(tape.scale(tape.add(logits, gumbel_noise), 1.0 / temperature));
  return hard ? tape.straight_through_onehot(soft) : soft;
}

SquashedNodes squashed_gaussian(Tape& tape, Tape::Id mean, Tape::Id log_std,
                                Tape::Id noise) {
  Tape::Id clamped = tape.clamp(log_std, kLogStdMin, kLogStdMax);
  Tape::Id std = tape.exp_(clamped);
  Tape::Id pre = tape.add(mean, tape.mul(std, noise));
  Tape::Id action = tape.tanh_(pre);
  // log N(pre; mean, std) = -0.5 xi^2 - 0.5 log(2 pi) - log_std, with xi the
  // fixed reparameterization noise; tanh correction subtracts log(1 - a^2).
  Tape::Id xi_sq = tape.constant(tape.val(noise).array().square());
  Tape::Id gauss = tape.sub(tape.scale(tape.add_scalar(xi_sq, kLogTwoPi), -0.5), clamped);
  Tape::Id correction =
      tape.log_(tape.add_scalar(tape.scale(tape.mul(action, action), -1.0), 1.0 + kSquashEps));
  Tape::Id log_prob = tape.rowsum(tape.sub(gauss, correction));
  return {action, log_prob};
}

}  // namespace psl::nn

#include <doctest.h>

#include <cmath>

#include "psl/nn/distributions.hpp"

using namespace psl::nn;

namespace {

// Central finite difference of fn over every entry of every param in nets,
// compared against tape gradients with relative error tol.
template <typename BuildLoss>
void check_gradients(std::vector<Mlp*> nets, BuildLoss&& build, double tol = 1e-4,
                     double h = 1e-5) {
  Tape tape;
  const Tape::Id loss = build(tape);
  tape.backward(loss);

  std::unordered_map<const Param*, Mat> grads;
  for (const auto& [p, gid] : tape.leaves()) grads[p] = tape.grad(gid);

  for (Mlp* net : nets) {
    net->for_each_param([&](Param& p) {
      REQUIRE(grads.count(&p) == 1);
      const Mat& g = grads.at(&p);
      for (long i = 0; i < p.value.rows(); ++i) {
        for (long j = 0; j < p.value.cols(); ++j) {
          const double orig = p.value(i, j);
          p.value(i, j) = orig + h;
          Tape tp;
          const double up = tp.val(build(tp))(0, 0);
          p.value(i, j) = orig - h;
          Tape tm;
          const double dn = tm.val(build(tm))(0, 0);
          p.value(i, j) = orig;
          const double fd = (up - dn) / (2 * h);
          const double denom = std::max({std::abs(fd), std::abs(g(i, j)), 1e-8});
          CHECK(std::abs(fd - g(i, j)) / denom <= tol);
        }
      }
    });
  }
}

}  // namespace

TEST_CASE("mlp forward matches hand computation") {
  Rng rng(3);
  Mlp net = make_mlp("f", 2, {3}, 1, Activation::Tanh, rng);
  REQUIRE(net.num_layers() == 2);
  CHECK(net.in_dim() == 2);
  CHECK(net.out_dim() == 1);

  Vec x(2);
  x << 0.3, -0.7;
  const Vec y = mlp_eval(net, x);

  Eigen::RowVectorXd h =
      (x.transpose() * net.weights[0].value + net.biases[0].value).array().tanh();
  const double expect =
      (h * net.weights[1].value + net.biases[1].value)(0, 0);
  CHECK(y[0] == doctest::Approx(expect).epsilon(1e-12));

  // Tape forward agrees with the tape-free eval.
  Tape tape;
  const auto out = mlp_forward(tape, net, tape.constant(x.transpose()));
  CHECK(tape.val(out)(0, 0) == doctest::Approx(y[0]).epsilon(1e-12));

  // Zero network maps everything to the bias.
  net.for_each_param([](Param& p) { p.value.setZero(); });
  net.biases[1].value(0, 0) = 4.0;
  CHECK(mlp_eval(net, x)[0] == doctest::Approx(4.0));
}

TEST_CASE("linear layer gradient is the input outer product") {
  Rng rng(5);
  Mlp net = make_mlp("lin", 3, {}, 2, Activation::Relu, rng);
  Vec x(3);
  x << 1.0, -2.0, 0.5;

  Tape tape;
  const auto out = mlp_forward(tape, net, tape.constant(x.transpose()));
  const auto loss = tape.sum(out);
  tape.backward(loss);

  // d sum(xW + b) / dW = x 1^T, d/db = 1.
  const Mat gw = tape.grad(tape.leaf(net.weights[0]));
  const Mat gb = tape.grad(tape.leaf(net.biases[0]));
  for (long i = 0; i < 3; ++i)
    for (long j = 0; j < 2; ++j) CHECK(gw(i, j) == doctest::Approx(x[i]));
  CHECK(gb(0, 0) == doctest::Approx(1.0));
  CHECK(gb(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("tape gradients match finite differences on a composite loss") {
  Rng rng(11);
  Mlp a = make_mlp("a", 2, {4}, 3, Activation::Tanh, rng);
  Mlp b = make_mlp("b", 3, {4}, 1, Activation::Relu, rng);
  const Mat x = sample_standard_normal(5, 2, rng);

  check_gradients({&a, &b}, [&](Tape& tape) {
    const auto h = mlp_forward(tape, a, tape.constant(x));
    const auto q = mlp_forward(tape, b, tape.tanh_(h));
    return tape.mean_all(tape.mul(q, q));
  });
}

TEST_CASE("tape ops cover their edge rules") {
  Tape tape;
  Mat m(2, 2);
  m << -1.0, 0.5, 2.0, -0.25;
  const auto c = tape.constant(m);

  CHECK(tape.val(tape.relu(c))(0, 0) == 0.0);
  CHECK(tape.val(tape.relu(c))(1, 0) == 2.0);
  CHECK(tape.val(tape.clamp(c, -0.5, 1.0))(0, 0) == -0.5);
  CHECK(tape.val(tape.logsumexp_rows(c)).rows() == 2);
  const Mat sm = tape.val(tape.softmax_rows(c));
  CHECK(sm.row(0).sum() == doctest::Approx(1.0));

  const auto st = tape.straight_through_onehot(tape.softmax_rows(c));
  CHECK(tape.val(st)(0, 1) == 1.0);  // 0.5 > -1
  CHECK(tape.val(st)(1, 0) == 1.0);

  CHECK_THROWS_AS((void)tape.val(999), std::logic_error);
}

TEST_CASE("backward rejects non-finite losses") {
  Tape tape;
  Mat z = Mat::Zero(1, 1);
  const auto bad = tape.log_(tape.constant(z));  // log 0 = -inf
  CHECK_THROWS(tape.backward(bad));
}

TEST_CASE("adam matches a hand-computed first step") {
  Param p;
  p.name = "w";
  p.value = Mat::Constant(1, 1, 2.0);
  Mat g = Mat::Constant(1, 1, 0.5);
  AdamConfig cfg;
  cfg.lr = 0.1;

  adam_update(p, g, cfg);
  // Bias-corrected m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps).
  const double expect = 2.0 - 0.1 * 0.5 / (0.5 + cfg.eps * std::sqrt(1 - cfg.beta2));
  CHECK(p.value(0, 0) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(p.step == 1);

  // Zero gradient leaves the value unchanged on a fresh accumulator.
  Param q;
  q.name = "b";
  q.value = Mat::Constant(1, 1, -1.5);
  adam_update(q, Mat::Zero(1, 1), cfg);
  CHECK(q.value(0, 0) == doctest::Approx(-1.5));
}

TEST_CASE("adam converges on a quadratic") {
  Param p;
  p.name = "w";
  p.value = Mat::Constant(1, 1, 3.0);
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    const Mat g = 2.0 * p.value;  // d/dw w^2
    adam_update(p, g, cfg);
  }
  CHECK(std::abs(p.value(0, 0)) < 1e-3);
}

TEST_CASE("squashed gaussian sampling statistics") {
  Rng rng(17);
  DiagonalGaussian head;
  head.mean = Vec::Zero(2);
  head.log_std = Vec::Constant(2, -40.0);  // clamped to exp(-20), ~deterministic

  const auto s = gaussian_policy_sample(head, rng);
  CHECK(std::abs(s.action[0]) < 1e-6);
  CHECK(std::abs(s.action[1]) < 1e-6);

  head.log_std = Vec::Zero(2);
  double mean0 = 0.0;
  int inside = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto draw = gaussian_policy_sample(head, rng);
    mean0 += draw.action[0];
    inside += std::abs(draw.action[0]) < 1.0 && std::abs(draw.action[1]) < 1.0;
    CHECK(std::isfinite(draw.log_prob));
  }
  CHECK(std::abs(mean0 / n) < 0.01);  // symmetric around 0
  CHECK(inside == n);                 // squashing keeps actions in (-1, 1)
}

TEST_CASE("squashed log prob stays finite near the boundary") {
  DiagonalGaussian head;
  head.mean = Vec::Constant(1, 3.0);
  head.log_std = Vec::Constant(1, -2.0);
  Vec pre = Vec::Constant(1, 8.0);  // tanh(8) ~ 1 - 2e-7
  const double lp = squashed_log_prob(head, pre);
  CHECK(std::isfinite(lp));

  // Density integrates the correction: at pre = mean the Gaussian term is
  // the mode, log N = -log_std - 0.5 log 2pi.
  pre[0] = 3.0;
  const double expect =
      2.0 - 0.5 * std::log(2 * M_PI) - std::log(1.0 - std::tanh(3.0) * std::tanh(3.0) + kSquashEps);
  CHECK(squashed_log_prob(head, pre) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("tape squashed gaussian agrees with the tape-free log prob") {
  Rng rng(23);
  DiagonalGaussian head;
  head.mean = Vec(2);
  head.mean << 0.4, -1.2;
  head.log_std = Vec(2);
  head.log_std << -0.5, 0.3;
  const auto s = gaussian_policy_sample(head, rng);

  Tape tape;
  const auto mean = tape.constant(head.mean.transpose());
  const auto log_std = tape.constant(head.log_std.transpose());
  const auto noise = tape.constant(s.noise.transpose());
  const auto nodes = squashed_gaussian(tape, mean, log_std, noise);
  CHECK(tape.val(nodes.log_prob)(0, 0) == doctest::Approx(s.log_prob).epsilon(1e-9));
  for (int i = 0; i < 2; ++i)
    CHECK(tape.val(nodes.action)(0, i) == doctest::Approx(s.action[i]).epsilon(1e-9));
}

TEST_CASE("gumbel softmax hard frequencies are uniform for uniform logits") {
  Rng rng(31);
  const Vec logits = Vec::Zero(4);
  Eigen::Vector4d counts = Eigen::Vector4d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vec y = gumbel_softmax_sample(logits, 1.0, rng, true);
    CHECK(y.sum() == doctest::Approx(1.0));
    Eigen::Index k;
    y.maxCoeff(&k);
    counts[k] += 1.0;
  }
  for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] / n - 0.25) <= 0.02);
}

TEST_CASE("gumbel softmax low temperature approaches one-hot") {
  Rng rng(37);
  Vec logits(3);
  logits << 0.1, 2.0, -1.0;
  // The output is one-hot unless two perturbed logits happen to land within
  // ~7 temperature units of each other, so count rather than demand it.
  int sharp = 0;
  for (int i = 0; i < 50; ++i) {
    const Vec y = gumbel_softmax_sample(logits, 0.01, rng, false);
    CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-9));
    sharp += y.maxCoeff() > 1.0 - 1e-3;
  }
  CHECK(sharp >= 45);
}

TEST_CASE("gumbel softmax with zero noise is a tempered softmax") {
  Tape tape;
  Mat logits(1, 3);
  logits << 1.0, 0.0, 0.0;
  const auto soft = gumbel_softmax(tape, tape.constant(logits),
                                   tape.constant(Mat::Zero(1, 3)), 0.5, false);
  const double e2 = std::exp(2.0);
  const double denom = e2 + 2.0;
  CHECK(tape.val(soft)(0, 0) == doctest::Approx(e2 / denom).epsilon(1e-12));
  CHECK(tape.val(soft)(0, 1) == doctest::Approx(1.0 / denom).epsilon(1e-12));

  const auto hard = gumbel_softmax(tape, tape.constant(logits),
                                   tape.constant(Mat::Zero(1, 3)), 0.5, true);
  CHECK(tape.val(hard)(0, 0) == 1.0);
  CHECK(tape.val(hard)(0, 1) == 0.0);
}

TEST_CASE("gumbel softmax gradients flow to logits") {
  Rng rng(41);
  Mlp net = make_mlp("logits", 2, {}, 3, Activation::Tanh, rng);
  const Mat x = sample_standard_normal(4, 2, rng);
  const Mat g = sample_gumbel(4, 3, rng);

  check_gradients({&net}, [&](Tape& tape) {
    const auto logits = mlp_forward(tape, net, tape.constant(x));
    const auto soft = gumbel_softmax(tape, logits, tape.constant(g), 0.5, false);
    return tape.mean_all(tape.mul(soft, soft));
  });
}

TEST_CASE("polyak update blends layer by layer") {
  Rng rng(43);
  Mlp online = make_mlp("o", 2, {3}, 1, Activation::Tanh, rng);
  Mlp target = make_mlp("t", 2, {3}, 1, Activation::Tanh, rng);
  const Mat before = target.weights[0].value;
  polyak_update(online, target, 0.25);
  const Mat expect = 0.75 * before + 0.25 * online.weights[0].value;
  CHECK((target.weights[0].value - expect).cwiseAbs().maxCoeff() < 1e-12);

  polyak_update(online, target, 1.0);  // rho = 1 copies exactly
  CHECK((target.weights[0].value - online.weights[0].value).cwiseAbs().maxCoeff() == 0.0);
}

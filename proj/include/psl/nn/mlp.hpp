#pragma once

#include <random>

#include "psl/nn/tape.hpp"

namespace psl::nn {

using Rng = std::mt19937_64;
using Vec = Eigen::VectorXd;

enum class Activation { Tanh, Relu };

// Multilayer perceptron parameters. Weights are (in x out), biases (1 x out).
struct Mlp {
  std::vector<Param> weights;
  std::vector<Param> biases;
  Activation activation = Activation::Relu;

  long in_dim() const { return weights.front().value.rows(); }
  long out_dim() const { return weights.back().value.cols(); }
  std::size_t num_layers() const { return weights.size(); }

  template <typename Fn>
  void for_each_param(Fn&& fn) {
    for (auto& w : weights) fn(w);
    for (auto& b : biases) fn(b);
  }
  template <typename Fn>
  void for_each_param(Fn&& fn) const {
    for (const auto& w : weights) fn(w);
    for (const auto& b : biases) fn(b);
  }
};

// Fan-in-scaled uniform init; the final layer is scaled by final_scale
// (policies use 0.01 for near-zero initial heads).
Mlp make_mlp(const std::string& name, long in, const std::vector<long>& hidden, long out,
             Activation act, Rng& rng, double final_scale = 1.0);

// Tracked forward pass: gradients flow into the net's parameters.
Tape::Id mlp_forward(Tape& tape, Mlp& net, Tape::Id input);

// Forward pass with parameters treated as constants.
Tape::Id mlp_forward_frozen(Tape& tape, const Mlp& net, Tape::Id input);

// target <- (1 - rho) * target + rho * online, layer by layer.
void polyak_update(const Mlp& online, Mlp& target, double rho);

// Tape-free forward passes for environment interaction.
Mat mlp_eval(const Mlp& net, const Mat& input);
Vec mlp_eval(const Mlp& net, const Vec& input);

}  // namespace psl::nn

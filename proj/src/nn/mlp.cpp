#include "psl/nn/mlp.hpp"

#include <cmath>

namespace psl::nn {

Mlp make_mlp(const std::string& name, long in, const std::vector<long>& hidden, long out,
             Activation act, Rng& rng, double final_scale) {
  if (in <= 0 || out <= 0) throw std::invalid_argument("mlp dims must be positive");
  std::vector<long> dims;
  dims.push_back(in);
  for (long h : hidden) dims.push_back(h);
  dims.push_back(out);

  Mlp net;
  net.activation = act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const long fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Param w, b;
    w.name = name + ".w" + std::to_string(l);
    b.name = name + ".b" + std::to_string(l);
    w.value = Mat::NullaryExpr(fan_in, fan_out, [&] { return u(rng); });
    b.value = Mat::Zero(1, fan_out);
    if (l + 2 == dims.size()) w.value *= final_scale;
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

namespace {

template <typename LayerFn>
Tape::Id forward_impl(Tape& tape, Tape::Id input, std::size_t layers, Activation act,
                      LayerFn&& layer) {
  Tape::Id h = input;
  for (std::size_t l = 0; l < layers; ++l) {
    h = layer(h, l);
    if (l + 1 < layers)
      h = (act == Activation::Tanh) ? tape.tanh_(h) : tape.relu(h);
  }
  return h;
}

}  // namespace

Tape::Id mlp_forward(Tape& tape, Mlp& net, Tape::Id input) {
  if (tape.cols(input) != net.in_dim())
    throw std::invalid_argument("mlp input dimension mismatch");
  return forward_impl(tape, input, net.num_layers(), net.activation,
                      [&](Tape::Id h, std::size_t l) {
                        return tape.add_rowvec(tape.matmul(h, tape.leaf(net.weights[l])),
                                               tape.leaf(net.biases[l]));
                      });
}

Tape::Id mlp_forward_frozen(Tape& tape, const Mlp& net, Tape::Id input) {
  if (tape.cols(input) != net.in_dim())
    throw std::invalid_argument("mlp input dimension mismatch");
  return forward_impl(tape, input, net.num_layers(), net.activation,
                      [&](Tape::Id h, std::size_t l) {
                        return tape.add_rowvec(tape.matmul(h, tape.constant(net.weights[l].value)),
                                               tape.constant(net.biases[l].value));
                      });
}


void polyak_update(const Mlp& online, Mlp& target, double rho) {
  if (online.num_layers() != target.num_layers())
    throw std::invalid_argument("polyak_update layer count mismatch");
  for (std::size_t l = 0; l < online.num_layers(); ++l) {
    target.weights[l].value =
        (1.0 - rho) * target.weights[l].value + rho * online.weights[l].value;
    target.biases[l].value =
        (1.0 - rho) * target.biases[l].value + rho * online.biases[l].value;
  }
}

Mat mlp_eval(const Mlp& net, const Mat& input) {
  if (input.cols() != net.in_dim())
    throw std::invalid_argument("mlp input dimension mismatch");
  Mat h = input;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    h = (h * net.weights[l].value).rowwise() + net.biases[l].value.row(0);
    if (l + 1 < net.num_layers())
      h = (net.activation == Activation::Tanh) ? h.array().tanh().matrix()
                                               : h.cwiseMax(0.0).eval();
  }
  return h;
}

Vec mlp_eval(const Mlp& net, const Vec& input) {
  Mat out = mlp_eval(net, Mat(input.transpose()));
  return out.row(0).transpose();
}

}  // namespace psl::nn

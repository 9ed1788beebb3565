#include "psl/nn/tape.hpp"

#include <cmath>

namespace psl::nn {

Tape::Id Tape::push(Mat value, std::function<void()> back) {
  nodes_.push_back(Node{std::move(value), Mat(), false, std::move(back)});
  return static_cast<Id>(nodes_.size() - 1);
}

Mat& Tape::grad_ref(Id id) {
  Node& n = nodes_[check(id)];
  if (!n.has_grad) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::add_grad(Id id, const Mat& g) { grad_ref(id) += g; }

const Mat& Tape::grad(Id id) const {
  const Node& n = nodes_[check(id)];
  if (!n.has_grad) throw std::logic_error("gradient not computed for node");
  return n.grad;
}

bool Tape::has_grad(Id id) const { return nodes_[check(id)].has_grad; }

Tape::Id Tape::constant(Mat value) { return push(std::move(value)); }

Tape::Id Tape::leaf(Param& p) {
  auto it = leaf_index_.find(&p);
  if (it != leaf_index_.end()) return it->second;
  Id id = push(p.value);
  leaves_.emplace_back(&p, id);
  leaf_index_.emplace(&p, id);
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  Id out = push(val(a) * val(b));
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out) * val(b).transpose());
    add_grad(b, val(a).transpose() * grad(out));
  };
  return out;
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
  Id out = push(val(a) * val(b).transpose());
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out) * val(b));
    add_grad(b, grad(out).transpose() * val(a));
  };
  return out;
}

Tape::Id Tape::add(Id a, Id b) {
  Id out = push(val(a) + val(b));
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out));
    add_grad(b, grad(out));
  };
  return out;
}

Tape::Id Tape::sub(Id a, Id b) {
  Id out = push(val(a) - val(b));
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out));
    add_grad(b, -grad(out));
  };
  return out;
}

Tape::Id Tape::mul(Id a, Id b) {
  Id out = push(val(a).cwiseProduct(val(b)));
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out).cwiseProduct(val(b)));
    add_grad(b, grad(out).cwiseProduct(val(a)));
  };
  return out;
}

Tape::Id Tape::add_rowvec(Id a, Id row) {
  Mat v = val(a);
  v.rowwise() += val(row).row(0);
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, a, row, out] {
    add_grad(a, grad(out));
    add_grad(row, grad(out).colwise().sum());
  };
  return out;
}

Tape::Id Tape::repeat_rows(Id row, long rows) {
  Id out = push(val(row).row(0).replicate(rows, 1));
  nodes_[check(out)].back = [this, row, out] {
    add_grad(row, grad(out).colwise().sum());
  };
  return out;
}

Tape::Id Tape::scale(Id a, double s) {
  Id out = push(val(a) * s);
  nodes_[check(out)].back = [this, a, out, s] { add_grad(a, grad(out) * s); };
  return out;
}

Tape::Id Tape::add_scalar(Id a, double c) {
  Id out = push(val(a).array() + c);
  nodes_[check(out)].back = [this, a, out] { add_grad(a, grad(out)); };
  return out;
}

Tape::Id Tape::tanh_(Id a) {
  Id out = push(val(a).array().tanh());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).cwiseProduct((1.0 - val(out).array().square()).matrix()));
  };
  return out;
}

Tape::Id Tape::relu(Id a) {
  Id out = push(val(a).cwiseMax(0.0));
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).cwiseProduct(
                    (val(a).array() > 0.0).cast<double>().matrix()));
  };
  return out;
}

Tape::Id Tape::exp_(Id a) {
  Id out = push(val(a).array().exp());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).cwiseProduct(val(out)));
  };
  return out;
}

Tape::Id Tape::log_(Id a) {
  Id out = push(val(a).array().log());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).cwiseQuotient(val(a)));
  };
  return out;
}

Tape::Id Tape::sqrt_(Id a) {
  Id out = push(val(a).array().sqrt());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, (grad(out).array() * 0.5 / val(out).array()).matrix());
  };
  return out;
}

Tape::Id Tape::reciprocal(Id a) {
  Id out = push(val(a).array().inverse());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, (-grad(out).array() * val(out).array().square()).matrix());
  };
  return out;
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  Id out = push(val(a).array().max(lo).min(hi));
  nodes_[check(out)].back = [this, a, out, lo, hi] {
    const auto inside =
        (val(a).array() >= lo && val(a).array() <= hi).cast<double>();
    add_grad(a, grad(out).cwiseProduct(inside.matrix()));
  };
  return out;
}

Tape::Id Tape::minimum(Id a, Id b) {
  Id out = push(val(a).cwiseMin(val(b)));
  nodes_[check(out)].back = [this, a, b, out] {
    const auto a_wins = (val(a).array() <= val(b).array()).cast<double>();
    add_grad(a, grad(out).cwiseProduct(a_wins.matrix()));
    add_grad(b, grad(out).cwiseProduct((1.0 - a_wins).matrix()));
  };
  return out;
}

Tape::Id Tape::sum(Id a) {
  Mat s(1, 1);
  s(0, 0) = val(a).sum();
  Id out = push(std::move(s));
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, Mat::Constant(val(a).rows(), val(a).cols(), grad(out)(0, 0)));
  };
  return out;
}

Tape::Id Tape::mean_all(Id a) {
  const double n = static_cast<double>(val(a).size());
  return scale(sum(a), 1.0 / n);
}

Tape::Id Tape::colsum(Id a) {
  Id out = push(val(a).colwise().sum());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).row(0).replicate(val(a).rows(), 1));
  };
  return out;
}

Tape::Id Tape::rowsum(Id a) {
  Id out = push(val(a).rowwise().sum());
  nodes_[check(out)].back = [this, a, out] {
    add_grad(a, grad(out).col(0).replicate(1, val(a).cols()));
  };
  return out;
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  if (val(a).rows() != val(b).rows())
    throw std::invalid_argument("concat_cols row mismatch");
  Mat v(val(a).rows(), val(a).cols() + val(b).cols());
  v << val(a), val(b);
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, a, b, out] {
    add_grad(a, grad(out).leftCols(val(a).cols()));
    add_grad(b, grad(out).rightCols(val(b).cols()));
  };
  return out;
}

Tape::Id Tape::concat_rows(const std::vector<Id>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows needs inputs");
  long rows = 0;
  const long cols = val(parts.front()).cols();
  for (Id p : parts) {
    if (val(p).cols() != cols) throw std::invalid_argument("concat_rows column mismatch");
    rows += val(p).rows();
  }
  Mat v(rows, cols);
  long r = 0;
  for (Id p : parts) {
    v.middleRows(r, val(p).rows()) = val(p);
    r += val(p).rows();
  }
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, parts, out] {
    long r = 0;
    for (Id p : parts) {
      add_grad(p, grad(out).middleRows(r, val(p).rows()));
      r += val(p).rows();
    }
  };
  return out;
}

Tape::Id Tape::slice_cols(Id a, long start, long n) {
  if (start < 0 || start + n > val(a).cols())
    throw std::invalid_argument("slice_cols out of range");
  Id out = push(val(a).middleCols(start, n));
  nodes_[check(out)].back = [this, a, out, start, n] {
    Mat g = Mat::Zero(val(a).rows(), val(a).cols());
    g.middleCols(start, n) = grad(out);
    add_grad(a, g);
  };
  return out;
}

Tape::Id Tape::softmax_rows(Id a) {
  Mat v = val(a);
  for (long i = 0; i < v.rows(); ++i) {
    Eigen::RowVectorXd row = v.row(i);
    const double mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    v.row(i) = row / row.sum();
  }
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, a, out] {
    const Mat& y = val(out);
    const Mat& g = grad(out);
    Mat dx(y.rows(), y.cols());
    for (long i = 0; i < y.rows(); ++i) {
      const double dot = y.row(i).dot(g.row(i));
      dx.row(i) = y.row(i).cwiseProduct((g.row(i).array() - dot).matrix());
    }
    add_grad(a, dx);
  };
  return out;
}

Tape::Id Tape::logsumexp_rows(Id a) {
  const Mat& x = val(a);
  Mat v(x.rows(), 1);
  for (long i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    v(i, 0) = mx + std::log((x.row(i).array() - mx).exp().sum());
  }
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, a, out] {
    const Mat& x = val(a);
    const Mat& lse = val(out);
    const Mat& g = grad(out);
    Mat dx(x.rows(), x.cols());
    for (long i = 0; i < x.rows(); ++i)
      dx.row(i) = g(i, 0) * (x.row(i).array() - lse(i, 0)).exp().matrix();
    add_grad(a, dx);
  };
  return out;
}

Tape::Id Tape::straight_through_onehot(Id soft) {
  const Mat& y = val(soft);
  Mat v = Mat::Zero(y.rows(), y.cols());
  for (long i = 0; i < y.rows(); ++i) {
    long j;
    y.row(i).maxCoeff(&j);
    v(i, j) = 1.0;
  }
  Id out = push(std::move(v));
  nodes_[check(out)].back = [this, soft, out] { add_grad(soft, grad(out)); };
  return out;
}

Tape::Id Tape::detach(Id a) { return push(val(a)); }

void Tape::backward(Id scalar_node) {
  const std::size_t root = check(scalar_node);
  if (nodes_[root].value.size() != 1)
    throw std::invalid_argument("backward requires a scalar node");
  if (!std::isfinite(nodes_[root].value(0, 0)))
    throw std::runtime_error("non-finite loss value");
  grad_ref(scalar_node)(0, 0) = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.back) continue;
    if (!n.grad.allFinite())
      throw std::runtime_error("non-finite gradient at tape node " + std::to_string(i));
    n.back();
  }
}

void adam_update(Param& p, const Mat& grad, const AdamConfig& cfg) {
  if (grad.rows() != p.value.rows() || grad.cols() != p.value.cols())
    throw std::invalid_argument("gradient shape mismatch for " + p.name);
  if (p.m.size() == 0) {
    p.m = Mat::Zero(p.value.rows(), p.value.cols());
    p.v = Mat::Zero(p.value.rows(), p.value.cols());
  }
  p.step += 1;
  p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * grad;
  p.v = cfg.beta2 * p.v.array().matrix() + (1.0 - cfg.beta2) * grad.array().square().matrix();
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
  const auto m_hat = p.m.array() / bc1;
  const auto v_hat = p.v.array() / bc2;
  p.value.array() -= cfg.lr * p.lr_scale * m_hat / (v_hat.sqrt() + cfg.eps);
}

void apply_gradients(const Tape& tape, const AdamConfig& cfg) {
  double scale = 1.0;
  if (cfg.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [param, node] : tape.leaves())
      if (tape.has_grad(node)) sq += tape.grad(node).squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > cfg.max_grad_norm) scale = cfg.max_grad_norm / norm;
  }
  for (const auto& [param, node] : tape.leaves()) {
    if (!tape.has_grad(node)) continue;
    if (scale == 1.0)
      adam_update(*param, tape.grad(node), cfg);
    else
      adam_update(*param, Mat(scale * tape.grad(node)), cfg);
  }
}

}  // namespace psl::nn

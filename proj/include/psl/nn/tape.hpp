#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace psl::nn {

using Mat = Eigen::MatrixXd;

// Learnable parameter with its Adam moment accumulators.
struct Param {
  std::string name;
  Mat value;
  Mat m, v;  // first/second moments, sized on first update
  long step = 0;
  double lr_scale = 1.0;  // per-parameter learning-rate multiplier
};

// Reverse-mode autodiff over a dynamically built computation graph.
// Rows are batch entries, columns are features. Each training step
// builds a fresh tape; backward() fills gradients for every tracked
// parameter leaf.
class Tape {
 public:
  using Id = int;

  Id constant(Mat value);
  // Tracked parameter leaf. Re-leafing the same Param returns the same
  // node so gradients from all uses accumulate.
  Id leaf(Param& p);

  Id matmul(Id a, Id b);
  Id matmul_nt(Id a, Id b);  // a * b^T
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);  // elementwise
  Id add_rowvec(Id a, Id row);   // row: 1 x n broadcast over rows of a
  Id repeat_rows(Id row, long rows);
  Id scale(Id a, double s);
  Id add_scalar(Id a, double c);
  Id tanh_(Id a);
  Id relu(Id a);
  Id exp_(Id a);
  Id log_(Id a);   // input must be positive
  Id sqrt_(Id a);
  Id reciprocal(Id a);
  Id clamp(Id a, double lo, double hi);  // zero gradient outside [lo, hi]
  Id minimum(Id a, Id b);
  Id sum(Id a);       // -> 1x1
  Id mean_all(Id a);  // -> 1x1
  Id colsum(Id a);    // sum down each column -> 1 x n
  Id rowsum(Id a);    // sum across each row  -> m x 1
  Id concat_cols(Id a, Id b);
  Id concat_rows(const std::vector<Id>& parts);
  Id slice_cols(Id a, long start, long n);
  Id softmax_rows(Id a);
  Id logsumexp_rows(Id a);  // -> m x 1
  // Forward: one-hot of the row argmax. Backward: identity
  // (straight-through estimator).
  Id straight_through_onehot(Id soft);
  Id detach(Id a);

  const Mat& val(Id id) const { return nodes_[check(id)].value; }
  long rows(Id id) const { return val(id).rows(); }
  long cols(Id id) const { return val(id).cols(); }

  // Seeds the given 1x1 node with gradient 1 and propagates in reverse
  // creation order. Throws if any value or gradient is non-finite.
  void backward(Id scalar_node);

  const Mat& grad(Id id) const;
  bool has_grad(Id id) const;

  // Parameter leaves touched by this tape, with their gradient nodes.
  const std::vector<std::pair<Param*, Id>>& leaves() const { return leaves_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool has_grad = false;
    std::function<void()> back;  // accumulates into child grads
  };

  std::size_t check(Id id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
      throw std::logic_error("invalid tape node id");
    return static_cast<std::size_t>(id);
  }
  Id push(Mat value, std::function<void()> back = nullptr);
  Mat& grad_ref(Id id);
  void add_grad(Id id, const Mat& g);

  std::vector<Node> nodes_;
  std::vector<std::pair<Param*, Id>> leaves_;
  std::unordered_map<const Param*, Id> leaf_index_;
};

// Standard Adam step (beta1=0.9, beta2=0.999, eps=1e-8).
struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 0.0;  // >0 clips the global gradient norm
};

void adam_update(Param& p, const Mat& grad, const AdamConfig& cfg);

// Adam step for every parameter leaf of a completed backward pass.
void apply_gradients(const Tape& tape, const AdamConfig& cfg);

}  // namespace psl::nn

#include "psl/mlps/losses.hpp"

#include <cmath>

namespace psl::mlps {

namespace {
constexpr double kNormEps = 1e-12;
}

BilinearSimilarity make_bilinear(int d_z, nn::Rng& rng) {
  if (d_z <= 0) throw std::invalid_argument("bilinear similarity requires d_z > 0");
  BilinearSimilarity sim;
  sim.w.name = "nce.W";
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_z));
  std::uniform_real_distribution<double> u(-bound, bound);
  sim.w.value = Mat(d_z, d_z);
  for (long i = 0; i < sim.w.value.size(); ++i) sim.w.value(i) = u(rng);
  return sim;
}

Tape::Id smoothness_loss(Tape& tape, Tape::Id anchors, const Mat& pair_targets,
                         const Eigen::VectorXd& dtw_vals, double kappa) {
  const long n = tape.rows(anchors);
  if (pair_targets.rows() != n || dtw_vals.size() != n || n == 0)
    throw std::invalid_argument("smoothness_loss: mismatched pair lists");
  Tape::Id diff = tape.sub(anchors, tape.constant(pair_targets));
  Tape::Id sq_norm = tape.rowsum(tape.mul(diff, diff));
  Tape::Id norm = tape.sqrt_(tape.add_scalar(sq_norm, kNormEps));
  Tape::Id residual = tape.sub(norm, tape.constant(kappa * dtw_vals));
  return tape.mean_all(tape.mul(residual, residual));
}

double smoothness_residual(const std::vector<Eigen::VectorXd>& z_a,
                           const std::vector<Eigen::VectorXd>& z_b,
                           const Eigen::VectorXd& dtw_vals, double kappa) {
  if (z_a.size() != z_b.size() || static_cast<long>(z_a.size()) != dtw_vals.size() ||
      z_a.empty())
    throw std::invalid_argument("smoothness_residual: mismatched pair lists");
  double sum = 0.0;
  for (std::size_t i = 0; i < z_a.size(); ++i) {
    const double r = (z_a[i] - z_b[i]).norm() - kappa * dtw_vals[static_cast<long>(i)];
    sum += r * r;
  }
  return sum / static_cast<double>(z_a.size());
}

Tape::Id info_nce_loss(Tape& tape, Tape::Id anchors, const Mat& targets,
                       BilinearSimilarity& sim) {
  const long c = tape.rows(anchors);
  if (c < 2) throw std::invalid_argument("InfoNCE needs at least 2 pairs");
  if (targets.rows() != c) throw std::invalid_argument("InfoNCE anchor/target mismatch");
  Tape::Id scores =
      tape.matmul_nt(tape.matmul(anchors, tape.leaf(sim.w)), tape.constant(targets));
  Tape::Id positives =
      tape.rowsum(tape.mul(scores, tape.constant(Mat::Identity(c, c))));
  Tape::Id lse = tape.logsumexp_rows(scores);  // log sum_j exp(f_ij)
  // -[f_ii - (lse - log C)]
  Tape::Id per_anchor = tape.add_scalar(tape.sub(lse, positives), -std::log(static_cast<double>(c)));
  return tape.mean_all(per_anchor);
}

double info_nce_value(const Mat& anchors, const Mat& targets, const Mat& w) {
  const long c = anchors.rows();
  if (c < 2) throw std::invalid_argument("InfoNCE needs at least 2 pairs");
  const Mat scores = anchors * w * targets.transpose();
  double loss = 0.0;
  for (long i = 0; i < c; ++i) {
    const double mx = scores.row(i).maxCoeff();
    const double lse = mx + std::log((scores.row(i).array() - mx).exp().sum());
    loss += (lse - std::log(static_cast<double>(c))) - scores(i, i);
  }
  return loss / static_cast<double>(c);
}

}  // namespace psl::mlps

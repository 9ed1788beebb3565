#pragma once

#include "psl/nn/mlp.hpp"

namespace psl::mlps {

using nn::Mat;
using nn::Param;
using nn::Tape;

// Learned bilinear similarity f(a, b) = a^T W b for the contrastive loss.
struct BilinearSimilarity {
  Param w;  // d_z x d_z
};

BilinearSimilarity make_bilinear(int d_z, nn::Rng& rng);

// Trajectory-centric smoothness: mean over pairs of
// (||z_i - z_j||_2 - kappa * DTW_ij)^2. DTW values are constants; the loss
// differentiates through the embeddings only.
// anchors: n x d_z node (one pair per row against pair_targets' rows).
Tape::Id smoothness_loss(Tape& tape, Tape::Id anchors, const Mat& pair_targets,
                         const Eigen::VectorXd& dtw_vals, double kappa);

// Plain evaluation for reporting and oracles.
double smoothness_residual(const std::vector<Eigen::VectorXd>& z_a,
                           const std::vector<Eigen::VectorXd>& z_b,
                           const Eigen::VectorXd& dtw_vals, double kappa);

// InfoNCE over a meta batch: anchor i's positive is target row i, negatives
// are the other target rows; the positive stays in the denominator:
//   mean_i -[ f(z_i, t_i) - log( (1/C) sum_j exp(f(z_i, t_j)) ) ].
// Requires C >= 2.
Tape::Id info_nce_loss(Tape& tape, Tape::Id anchors, const Mat& targets,
                       BilinearSimilarity& sim);

double info_nce_value(const Mat& anchors, const Mat& targets, const Mat& w);

}  // namespace psl::mlps

#pragma once

#include <vector>

#include "psl/core/types.hpp"

namespace psl::dtw {

// Projected state trajectory with uniform vector dimension.
using StateSequence = std::vector<core::Vec>;

// Classic cumulative-cost DTW with Euclidean ground metric:
//   D(i,j) = d(i,j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1)).
// Unnormalized; symmetric in its arguments. Throws on empty input or
// dimension mismatch.
double dtw_distance(const StateSequence& a, const StateSequence& b);

// Exhaustive minimum over all monotone warping paths. Test oracle;
// requires |a|*|b| <= 64.
double dtw_bruteforce(const StateSequence& a, const StateSequence& b);

// Linear interpolation onto L evenly spaced indices, endpoints preserved.
// Requires L >= 2.
StateSequence resample(const StateSequence& seq, int L);

// Sum of per-index Euclidean distances after resampling both sequences
// to length L. Comparison baseline for the coefficient-of-variation study.
double pointwise_euclidean(const StateSequence& a, const StateSequence& b, int L);

// Projected and resampled position sequence of a trajectory.
StateSequence trajectory_to_sequence(const core::Trajectory& traj, core::EnvKind kind,
                                     int L = 40, bool wind_full_state = false);

}  // namespace psl::dtw

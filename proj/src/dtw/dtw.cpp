#include "psl/dtw/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace psl::dtw {
namespace {

void check_inputs(const StateSequence& a, const StateSequence& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty state sequence");
  const long dim = a.front().size();
  for (const auto& v : a)
    if (v.size() != dim) throw std::invalid_argument("non-uniform dimension in sequence");
  for (const auto& v : b)
    if (v.size() != dim) throw std::invalid_argument("sequence dimension mismatch");
}

}  // namespace

double dtw_distance(const StateSequence& a, const StateSequence& b) {
  check_inputs(a, b);
  const std::size_t n = a.size(), m = b.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double d = (a[i - 1] - b[j - 1]).norm();
      cur[j] = d + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

double brute(const StateSequence& a, const StateSequence& b, std::size_t i, std::size_t j) {
  const double d = (a[i] - b[j]).norm();
  if (i == 0 && j == 0) return d;
  double best = std::numeric_limits<double>::infinity();
  if (i > 0) best = std::min(best, brute(a, b, i - 1, j));
  if (j > 0) best = std::min(best, brute(a, b, i, j - 1));
  if (i > 0 && j > 0) best = std::min(best, brute(a, b, i - 1, j - 1));
  return d + best;
}

}  // namespace

double dtw_bruteforce(const StateSequence& a, const StateSequence& b) {
  check_inputs(a, b);
  if (a.size() * b.size() > 64)
    throw std::invalid_argument("dtw_bruteforce limited to |a|*|b| <= 64");
  return brute(a, b, a.size() - 1, b.size() - 1);
}

StateSequence resample(const StateSequence& seq, int L) {
  if (seq.empty()) throw std::invalid_argument("empty state sequence");
  if (L < 2) throw std::invalid_argument("resample length must be >= 2");
  const std::size_t n = seq.size();
  StateSequence out;
  out.reserve(static_cast<std::size_t>(L));
  if (n == 1) {
    out.assign(static_cast<std::size_t>(L), seq.front());
    return out;
  }
  for (int k = 0; k < L; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(n - 1) / (L - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    out.push_back((1.0 - frac) * seq[lo] + frac * seq[hi]);
  }
  return out;
}

double pointwise_euclidean(const StateSequence& a, const StateSequence& b, int L) {
  check_inputs(a, b);
  const StateSequence ra = resample(a, L), rb = resample(b, L);
  double sum = 0.0;
  for (int i = 0; i < L; ++i) sum += (ra[static_cast<std::size_t>(i)] - rb[static_cast<std::size_t>(i)]).norm();
  return sum;
}

StateSequence trajectory_to_sequence(const core::Trajectory& traj, core::EnvKind kind,
                                     int L, bool wind_full_state) {
  if (traj.empty()) throw std::invalid_argument("empty trajectory");
  StateSequence seq;
  seq.reserve(traj.size() + 1);
  seq.push_back(core::state_projection(traj.transitions.front().state, kind, wind_full_state));
  for (const auto& t : traj.transitions)
    seq.push_back(core::state_projection(t.next_state, kind, wind_full_state));
  return resample(seq, L);
}

}  // namespace psl::dtw

#include <doctest.h>

#include <random>

#include "psl/dtw/dtw.hpp"

using namespace psl::dtw;
using psl::core::Vec;

namespace {

StateSequence scalars(std::initializer_list<double> vals) {
  StateSequence s;
  for (double v : vals) s.push_back(Vec::Constant(1, v));
  return s;
}

StateSequence random_seq(int len, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  StateSequence s;
  for (int i = 0; i < len; ++i) {
    Vec v(dim);
    for (int d = 0; d < dim; ++d) v[d] = u(rng);
    s.push_back(std::move(v));
  }
  return s;
}

}  // namespace

TEST_CASE("dtw basics") {
  const auto ramp = scalars({0, 1, 2, 3});
  CHECK(dtw_distance(ramp, ramp) == doctest::Approx(0.0));

  CHECK(dtw_distance(scalars({0, 1, 2}), scalars({0, 2})) == doctest::Approx(1.0));

  Vec p(2), q(2);
  p << 0, 0;
  q << 3, 4;
  CHECK(dtw_distance({p}, {q}) == doctest::Approx(5.0));

  CHECK_THROWS_AS(dtw_distance({}, ramp), std::invalid_argument);
  CHECK_THROWS_AS(dtw_distance({p}, scalars({1.0})), std::invalid_argument);
}

TEST_CASE("brute force oracle basics") {
  const auto ramp = scalars({0, 1, 2, 3});
  const auto rev = scalars({3, 2, 1, 0});
  CHECK(dtw_bruteforce(ramp, ramp) == doctest::Approx(0.0));
  CHECK(dtw_bruteforce(ramp, rev) > 0.0);
  std::mt19937_64 rng(1);
  const auto nine = random_seq(9, 1, rng);
  CHECK_THROWS_AS(dtw_bruteforce(nine, nine), std::invalid_argument);
}

TEST_CASE("dtw matches the exhaustive oracle on 200 random pairs") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> len(1, 8), dim(1, 3);
  for (int i = 0; i < 200; ++i) {
    const int d = dim(rng);
    const auto a = random_seq(len(rng), d, rng);
    const auto b = random_seq(len(rng), d, rng);
    CHECK(std::abs(dtw_distance(a, b) - dtw_bruteforce(a, b)) <= 1e-9);
  }
}

TEST_CASE("dtw symmetry, non-negativity, diagonal bound") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_seq(6, 2, rng);
    const auto b = random_seq(6, 2, rng);
    const double ab = dtw_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab == doctest::Approx(dtw_distance(b, a)));
    double diag = 0.0;
    for (int j = 0; j < 6; ++j) diag += (a[j] - b[j]).norm();
    CHECK(ab <= diag + 1e-12);
  }
}

TEST_CASE("resample") {
  const auto seq = scalars({0, 1, 2, 3});
  const auto same = resample(seq, 4);
  for (int i = 0; i < 4; ++i) CHECK(same[i][0] == doctest::Approx(seq[i][0]));

  const auto mid = resample(scalars({0, 1}), 3);
  REQUIRE(mid.size() == 3);
  CHECK(mid[1][0] == doctest::Approx(0.5));

  StateSequence ramp;
  for (int i = 0; i < 10; ++i) ramp.push_back(Vec::Constant(1, static_cast<double>(i)));
  const auto five = resample(ramp, 5);
  const double expect[] = {0, 2.25, 4.5, 6.75, 9};
  for (int i = 0; i < 5; ++i) CHECK(five[i][0] == doctest::Approx(expect[i]));

  CHECK_THROWS_AS(resample(ramp, 1), std::invalid_argument);
}

TEST_CASE("pointwise euclidean and trajectory conversion") {
  const auto a = scalars({0, 0, 0});
  const auto b = scalars({1, 1, 1});
  CHECK(pointwise_euclidean(a, b, 3) == doctest::Approx(3.0));

  psl::core::Trajectory traj;
  Vec s = Vec::Zero(5);
  for (int i = 0; i < 6; ++i) {
    psl::core::Transition t;
    t.state = s;
    t.action = Vec::Zero(2);
    s[0] += 0.5;
    s[1] += 0.5;
    t.next_state = s;
    t.done = i == 5;
    traj.transitions.push_back(std::move(t));
  }
  const auto seq = trajectory_to_sequence(traj, psl::core::EnvKind::Door, 10);
  REQUIRE(seq.size() == 10);
  CHECK(seq[0].size() == 2);
  CHECK(seq[0][0] == doctest::Approx(0.0));
  CHECK(seq[9][0] == doctest::Approx(3.0));
}

#include <doctest.h>

#include <sstream>

#include "psl/core/replay.hpp"
#include "psl/core/serialize.hpp"

using namespace psl::core;

namespace {

Trajectory make_traj(int steps, bool success = false, const std::string& id = "t") {
  Trajectory traj;
  traj.task_id = id;
  traj.success = success;
  Vec s = Vec::Zero(2);
  for (int i = 0; i < steps; ++i) {
    Transition t;
    t.state = s;
    t.action = Vec::Constant(2, 0.5);
    t.reward = static_cast<double>(i);
    s = s.array() + 0.25;
    t.next_state = s;
    t.done = i == steps - 1;
    traj.transitions.push_back(std::move(t));
  }
  return traj;
}

}  // namespace

TEST_CASE("env kind names round trip") {
  for (EnvKind k : {EnvKind::Door, EnvKind::Wind, EnvKind::GatherOne, EnvKind::GatherTwo,
                    EnvKind::Block})
    CHECK(env_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(env_kind_from_string("lava"), std::invalid_argument);
}

TEST_CASE("trajectory validation") {
  CHECK_THROWS_AS(validate_trajectory(Trajectory{}), std::invalid_argument);
  Trajectory good = make_traj(5);
  CHECK_NOTHROW(validate_trajectory(good));

  Trajectory broken_chain = make_traj(5);
  broken_chain.transitions[2].next_state[0] += 1.0;
  CHECK_THROWS_AS(validate_trajectory(broken_chain), std::invalid_argument);

  Trajectory early_done = make_traj(5);
  early_done.transitions[1].done = true;
  CHECK_THROWS_AS(validate_trajectory(early_done), std::invalid_argument);

  Trajectory big_action = make_traj(5);
  big_action.transitions[0].action[0] = 1.5;
  CHECK_THROWS_AS(validate_trajectory(big_action), std::invalid_argument);
}

TEST_CASE("replay insert and whole-trajectory eviction") {
  TaskReplayBuffer buf(100);
  buf.insert(make_traj(40));
  CHECK(buf.size() == 40);
  CHECK(buf.num_trajectories() == 1);

  buf.insert(make_traj(40));
  CHECK(buf.size() == 80);
  buf.insert(make_traj(40));
  CHECK(buf.size() == 80);  // oldest trajectory evicted as a whole
  CHECK(buf.num_trajectories() == 2);

  CHECK_THROWS_AS(buf.insert(Trajectory{}), std::invalid_argument);
  CHECK_THROWS_AS(buf.insert(make_traj(101)), std::invalid_argument);
}

TEST_CASE("replay transition sampling") {
  Rng rng(7);
  TaskReplayBuffer buf(100);
  CHECK_THROWS(buf.sample_transitions(1, rng));

  buf.insert(make_traj(1));
  const auto five = buf.sample_transitions(5, rng);
  CHECK(five.size() == 5);
  for (const auto& t : five) CHECK(t.reward == 0.0);
  CHECK(buf.sample_transitions(0, rng).empty());
}

TEST_CASE("replay transition sampling is near uniform") {
  Rng rng(11);
  TaskReplayBuffer buf(1000);
  buf.insert(make_traj(100));
  std::vector<int> counts(100, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto t = buf.sample_transitions(1, rng);
    ++counts[static_cast<int>(t[0].reward)];
  }
  // Expected 100 per bucket, sd ~10; 5 sd keeps the flakiness negligible.
  for (int c : counts) {
    CHECK(c > 50);
    CHECK(c < 150);
  }
}

TEST_CASE("replay trajectory sampling and the not-ready gate") {
  Rng rng(3);
  TaskReplayBuffer buf(1000);
  buf.insert(make_traj(3, false, "f0"));
  buf.insert(make_traj(3, false, "f1"));
  buf.insert(make_traj(3, false, "f2"));
  CHECK(!buf.sample_trajectory(true, rng).has_value());
  CHECK(buf.num_success_trajectories() == 0);

  buf.insert(make_traj(4, true, "s"));
  const auto s = buf.sample_trajectory(true, rng);
  REQUIRE(s.has_value());
  CHECK(s->task_id == "s");
  CHECK(s->size() == 4);
  validate_trajectory(*s);
}

TEST_CASE("replay trajectory sampling is uniform over records") {
  Rng rng(5);
  TaskReplayBuffer buf(1000);
  buf.insert(make_traj(2, false, "a"));
  buf.insert(make_traj(2, false, "b"));
  int a = 0;
  for (int i = 0; i < 10000; ++i)
    if (buf.sample_trajectory(false, rng)->task_id == "a") ++a;
  CHECK(a > 4700);
  CHECK(a < 5300);
}

TEST_CASE("replay capacity holds under random insert sequences") {
  Rng rng(17);
  std::uniform_int_distribution<int> len(1, 30);
  TaskReplayBuffer buf(64);
  for (int i = 0; i < 200; ++i) {
    buf.insert(make_traj(len(rng), i % 3 == 0));
    CHECK(buf.size() <= buf.capacity());
    const auto t = buf.sample_trajectory(false, rng);
    REQUIRE(t.has_value());
    validate_trajectory(*t);
  }
}

TEST_CASE("replay sampling reproducible under identical seeds") {
  TaskReplayBuffer buf(1000);
  buf.insert(make_traj(50));
  Rng r1(9), r2(9);
  const auto a = buf.sample_transitions(20, r1);
  const auto b = buf.sample_transitions(20, r2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].reward == b[i].reward);
}

TEST_CASE("state projection") {
  Vec full(5);
  full << 1.5, -2.0, 1.0, 0.3, 0.4;
  const Vec p = state_projection(full, EnvKind::Door);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == 1.5);
  CHECK(p[1] == -2.0);

  Vec flat(2);
  flat << 3.0, 4.0;
  CHECK(state_projection(flat, EnvKind::GatherOne) == flat);

  Vec bad(3);
  CHECK_THROWS_AS(state_projection(bad, EnvKind::Door), std::invalid_argument);

  CHECK(state_projection(full, EnvKind::Wind, true) == full);
  CHECK(projected_state_dim(EnvKind::Wind, true) == 5);
  CHECK(projected_state_dim(EnvKind::Door) == 2);
}

TEST_CASE("trajectory serialization round trip") {
  std::vector<Trajectory> trajs{make_traj(3, true, "alpha"), make_traj(5, false, "beta")};
  std::stringstream ss;
  write_trajectories(ss, trajs);
  const auto back = read_trajectories(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].task_id == "alpha");
  CHECK(back[0].size() == 3);
  CHECK(back[1].size() == 5);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < back[i].size(); ++j) {
      CHECK(back[i].transitions[j].state == trajs[i].transitions[j].state);
      CHECK(back[i].transitions[j].reward == trajs[i].transitions[j].reward);
      CHECK(back[i].transitions[j].done == trajs[i].transitions[j].done);
    }
  }
}

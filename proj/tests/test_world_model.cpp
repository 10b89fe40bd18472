#include "doctest.h"

#include "objcomp/world_model.hpp"

#include <cmath>
#include <map>

using namespace objcomp;

namespace {

SegmentMask mask(std::initializer_list<int> on, std::size_t n = 3) {
  SegmentMask m(n);
  for (int i : on) m.set(static_cast<std::size_t>(i));
  return m;
}

/// Hypotheses {0} and {1,2}; {1,2} sits behind segment 0. Action 0 grasps {0}, action 1 grasps {1,2}
/// and is blocked by segment 0.
ModelTables tables(Location dest) {
  ModelTables t;
  t.hyp_mask = {mask({0}), mask({1, 2})};
  t.hyp_occluders = {mask({}), mask({0})};
  t.hyp_visible = {1.0, 0.4};
  t.quality = {{1.0, 0.0}, {0.0, 1.0}};
  t.block = {mask({}), mask({0})};
  t.destination = {dest, dest};
  t.key = {10, 11};
  t.reveal = {false, false};
  return t;
}

WorldState two_objects(bool red0, bool red1) {
  WorldState s;
  ObjectState a, b;
  a.hypothesis = 0;
  a.is_red = red0;
  b.hypothesis = 1;
  b.is_red = red1;
  b.visible_fraction = 0.4;
  s.objects = {a, b};
  return s;
}

}  // namespace

TEST_CASE("p_correct") {
  CHECK(p_correct(1.0) == doctest::Approx(1.0 - 0.5 * std::exp(-2.5)));
  CHECK(p_correct(1.0) == doctest::Approx(0.959).epsilon(1e-3));
  CHECK(p_correct(0.0) == doctest::Approx(1.0 - 0.5 * std::exp(-0.5)));
  CHECK(p_correct(0.5) < p_correct(0.9));
}

TEST_CASE("task destinations") {
  CHECK(task_destinations(TaskKind::table_clearing) == std::vector<Location>{Location::removed});
  CHECK(task_destinations(TaskKind::object_search) == std::vector<Location>{Location::red_box, Location::green_box});
  CHECK(task_kind_from_string("object_search") == TaskKind::object_search);
  CHECK_THROWS_AS(task_kind_from_string("juggling"), Error);
}

TEST_CASE("success probability and blocking") {
  const WorldModel m(tables(Location::removed), TaskSpec{});
  const auto s = two_objects(false, false);
  CHECK(m.success_probability(s, 0, 0) == doctest::Approx(0.95));
  CHECK(m.success_probability(s, 1, 1) == 0.0);  // blocked by segment 0
  CHECK(m.target(s, 1).first == -1);

  const auto after = m.transition(s, 0, true);
  CHECK(after.success);
  CHECK(after.next.objects[0].location == Location::removed);
  // the occluder left: the hidden part becomes visible and the grasp is unblocked
  CHECK(after.next.objects[1].visible_fraction == doctest::Approx(1.0));
  CHECK(m.success_probability(after.next, 1, 1) == doctest::Approx(0.95));
}

TEST_CASE("failure records the grasp") {
  const WorldModel m(tables(Location::removed), TaskSpec{});
  const auto s = two_objects(false, false);
  const auto t = m.transition(s, 0, false);
  CHECK_FALSE(t.success);
  CHECK(t.next.objects[0].failed_grasps == std::vector<std::uint64_t>{10});
  CHECK(m.success_probability(t.next, 0, 0) == 0.0);
  CHECK(m.reward(s, 0, t) == 0.0);
}

TEST_CASE("rewards") {
  SUBCASE("table clearing") {
    const WorldModel m(tables(Location::removed), TaskSpec{});
    const auto s = two_objects(false, false);
    CHECK(m.reward(s, 0, m.transition(s, 0, true)) == 1.0);
    CHECK(m.expected_reward(s, 0) == doctest::Approx(0.95));
  }
  SUBCASE("object search, red box") {
    const WorldModel m(tables(Location::red_box), TaskSpec{TaskKind::object_search});
    CHECK(m.success_reward(two_objects(true, false), 0, 0) == 1.0);
    CHECK(m.success_reward(two_objects(false, false), 0, 0) == -1.0);
  }
  SUBCASE("object search, green box") {
    const WorldModel m(tables(Location::green_box), TaskSpec{TaskKind::object_search});
    CHECK(m.success_reward(two_objects(true, false), 0, 0) == 0.0);
  }
}

TEST_CASE("observations") {
  const WorldModel m(tables(Location::red_box), TaskSpec{TaskKind::object_search});
  const auto s = two_objects(false, true);
  const auto t = m.transition(s, 0, true);
  CHECK(m.revealed_objects(t.next, 0) == std::vector<int>{1});

  // the two possible colour reports have total probability 1
  double total = 0.0;
  std::map<bool, int> seen;
  for (std::uint64_t k = 0; k < 2000; ++k) {
    Rng rng(k);
    const auto o = m.sample_observation(t, rng);
    REQUIRE(o.colors.size() == 1);
    seen[o.colors[0].observed_red]++;
  }
  for (bool red : {false, true}) {
    Observation o;
    o.success = true;
    o.moved = m.object_key(t.next, 0);
    o.colors = {{m.object_key(t.next, 1), red}};
    total += m.observation_probability(o, t);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(seen[true] / 2000.0 == doctest::Approx(p_correct(1.0)).epsilon(0.03));

  Observation wrong;
  wrong.success = false;
  CHECK(m.observation_probability(wrong, t) == 0.0);
}

TEST_CASE("reveal actions grasp hallucinated objects once uncovered") {
  ModelTables t = tables(Location::red_box);
  t.quality.push_back({0.0, 0.0});
  t.block.push_back(mask({}));
  t.destination.push_back(Location::red_box);
  t.key.push_back(99);
  t.reveal.push_back(true);
  const WorldModel m(std::move(t), TaskSpec{TaskKind::object_search});
  CHECK(m.is_virtual(2));

  auto s = two_objects(false, false);
  ObjectState hidden;
  hidden.parent = 0;
  hidden.is_red = true;
  hidden.visible_fraction = 0.0;
  s.objects.push_back(hidden);
  CHECK(m.success_probability(s, 2, 2) == 0.0);
  const auto after = m.transition(s, 0, true);
  CHECK(after.next.objects[2].visible_fraction == 1.0);
  CHECK(m.success_probability(after.next, 2, 2) == doctest::Approx(0.95));
  CHECK(m.success_probability(after.next, 0, 2) == 0.0);
}

TEST_CASE("table consistency") {
  ModelTables t = tables(Location::removed);
  t.key.pop_back();
  CHECK_THROWS_AS(WorldModel(t, TaskSpec{}), Error);
  CHECK_THROWS_AS(WorldModel(tables(Location::removed), TaskSpec{TaskKind::table_clearing, 0}), Error);
}

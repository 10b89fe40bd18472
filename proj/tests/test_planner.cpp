#include "doctest.h"

#include "objcomp/planner.hpp"

using namespace objcomp;

namespace {

/// Two hypotheses. Action 0 reaches hypothesis 0 with success 0.8; action 1 reaches hypothesis 1
/// with success 0.4. Hypothesis 0 exists with probability 0.6, hypothesis 1 always.
struct Toy {
  WorldModel model;
  ParticleSet particles;

  explicit Toy(int horizon = 3)
      : model(
            [] {
              ModelTables t;
              SegmentMask a(2), b(2);
              a.set(0);
              b.set(1);
              t.hyp_mask = {a, b};
              t.hyp_occluders = {SegmentMask(2), SegmentMask(2)};
              t.hyp_visible = {10.0 / 13.0, 2.0 / 13.0};
              t.quality = {{1.0, 0.0}, {0.0, 1.0}};
              t.block = {SegmentMask(2), SegmentMask(2)};
              t.destination = {Location::removed, Location::removed};
              t.key = {1, 2};
              t.reveal = {false, false};
              return t;
            }(),
            TaskSpec{TaskKind::table_clearing, horizon}) {
    ObjectState h0, h1;
    h0.hypothesis = 0;
    h0.visible_fraction = 10.0 / 13.0;
    h1.hypothesis = 1;
    h1.visible_fraction = 2.0 / 13.0;
    particles.states = {WorldState{{h0, h1}}, WorldState{{h1}}};
    particles.weights = {0.6, 0.4};
  }
};

}  // namespace

TEST_CASE("max utility") {
  Toy toy;
  CHECK(toy.model.expected_reward(toy.particles.states[0], 0) == doctest::Approx(0.8));
  CHECK(max_utility_action(toy.particles, toy.model) == std::optional<std::size_t>(0));

  SUBCASE("nothing worth doing stops") {
    ParticleSet empty = toy.particles;
    for (auto& s : empty.states)
      for (auto& o : s.objects) o.location = Location::removed;
    CHECK_FALSE(max_utility_action(empty, toy.model).has_value());
    CHECK_FALSE(plan(empty, toy.model, PlannerConfig{}).chosen.has_value());
  }
}

TEST_CASE("horizon one equals max utility") {
  Toy toy(1);
  PlannerConfig cfg;
  cfg.horizon = 1;
  const auto d = plan(toy.particles, toy.model, cfg);
  REQUIRE(d.chosen);
  CHECK(*d.chosen == 0);
  CHECK(d.q_values[0].mean == doctest::Approx(0.48));
  CHECK(d.q_values[1].mean == doctest::Approx(0.4));
}

TEST_CASE("two-step lookahead") {
  // after action 0 the remaining best move is action 1 (0.4); hand expectation 0.48 + 0.4 = 0.88
  Toy toy(2);
  PlannerConfig cfg;
  cfg.horizon = 2;
  const auto d = plan(toy.particles, toy.model, cfg);
  REQUIRE(d.chosen);
  CHECK(d.q_values[0].mean == doctest::Approx(0.88));
  // action 1 first: 0.4, then action 0 on the 0.6 branch for 0.48 in total
  CHECK(d.q_values[1].mean == doctest::Approx(0.88));
  CHECK(d.rollout_count > 0);
}

TEST_CASE("merge duplicates") {
  Toy toy;
  ParticleSet p;
  p.states = {toy.particles.states[1], toy.particles.states[0], toy.particles.states[1]};
  p.weights = {0.25, 0.5, 0.25};
  const auto m = merge_duplicates(p);
  REQUIRE(m.states.size() == 2);
  double total = 0.0;
  for (double w : m.weights) total += w;
  CHECK(total == doctest::Approx(1.0));
  CHECK(std::is_sorted(m.states.begin(), m.states.end()));
}

TEST_CASE("planner config validation") {
  PlannerConfig c;
  c.horizon = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.particles_per_node = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("plan is deterministic in the seed") {
  Toy toy(3);
  PlannerConfig cfg;
  cfg.seed = 5;
  const auto a = plan(toy.particles, toy.model, cfg), b = plan(toy.particles, toy.model, cfg);
  CHECK(a.chosen == b.chosen);
  CHECK(a.q_values[0].mean == b.q_values[0].mean);
}

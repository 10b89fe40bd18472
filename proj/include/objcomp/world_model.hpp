#pragma once

#include "objcomp/belief.hpp"
#include "objcomp/grasp.hpp"
#include "objcomp/rng.hpp"

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

namespace objcomp {

enum class TaskKind { table_clearing, object_search };

std::string_view to_string(TaskKind k);
TaskKind task_kind_from_string(std::string_view s);

struct TaskSpec {
  TaskKind kind = TaskKind::table_clearing;
  int horizon = 3;
  double discount = 1.0;

  void validate() const;
};

/// Destinations a grasp may carry for a task.
std::vector<Location> task_destinations(TaskKind kind);

struct ModelParams {
  int k_obs = 3;
  double a1 = -0.5;
  double a2 = -0.02;
  OcclusionModel occ;
  /// Adds one virtual action per destination that grasps a hallucinated object once revealed.
  bool reveal_actions = false;
};

/// Probability that a color observation of an object with visible fraction v is correct.
double p_correct(double v, const ModelParams& params = {});

/// Everything the model needs to know about actions and hypotheses.
struct ModelTables {
  std::vector<SegmentMask> hyp_mask;
  std::vector<SegmentMask> hyp_occluders;
  /// Visible fraction of each hypothesis in the current view.
  std::vector<double> hyp_visible;
  /// quality[a][h] of action a on hypothesis h.
  std::vector<std::vector<double>> quality;
  /// Segments whose presence (outside the target) blocks action a.
  std::vector<SegmentMask> block;
  std::vector<Location> destination;
  std::vector<std::uint64_t> key;
  std::vector<bool> reveal;
};

struct Transition {
  WorldState next;
  /// Object index targeted by the action, or -1.
  int target = -1;
  bool success = false;
  double success_probability = 0.0;
};

struct ColorObservation {
  std::int64_t object = 0;
  bool observed_red = false;
  bool operator==(const ColorObservation&) const = default;
  auto operator<=>(const ColorObservation&) const = default;
};

struct Observation {
  static constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::min();
  std::int64_t moved = kNone;
  bool success = false;
  std::vector<ColorObservation> colors;
  bool operator==(const Observation&) const = default;
  auto operator<=>(const Observation&) const = default;
};

class WorldModel {
 public:
  WorldModel(ModelTables tables, TaskSpec task, ModelParams params = {});

  /// Tables for `actions` over every hypothesis of the catalog.
  static WorldModel from_catalog(const HypothesisCatalog& catalog, const std::vector<GraspAction>& actions,
                                 TaskSpec task, ModelParams params = {});

  std::size_t action_count() const { return tables_.destination.size(); }
  bool is_virtual(std::size_t a) const { return tables_.reveal[a]; }
  Location destination(std::size_t a) const { return tables_.destination[a]; }
  const TaskSpec& task() const { return task_; }
  const ModelParams& params() const { return params_; }
  const ModelTables& tables() const { return tables_; }

  double success_probability(const WorldState& s, std::size_t a, std::size_t object) const;
  /// Object with the highest success probability (lowest index on ties) and that probability.
  std::pair<int, double> target(const WorldState& s, std::size_t a) const;

  /// Deterministic successor for a given outcome.
  Transition transition(const WorldState& s, std::size_t a, bool success) const;
  Transition sample_transition(const WorldState& s, std::size_t a, Rng& rng) const;
  Observation sample_observation(const Transition& t, Rng& rng) const;
  double observation_probability(const Observation& o, const Transition& t) const;

  /// Reward of the transition; the stop action is not represented here and always earns 0.
  double reward(const WorldState& before, std::size_t a, const Transition& t) const;
  /// Reward of a success of action a on object `object`.
  double success_reward(const WorldState& s, std::size_t a, int object) const;
  double expected_reward(const WorldState& s, std::size_t a) const;

  /// Identity of an object shared across particles of one belief.
  std::int64_t object_key(const WorldState& s, int object) const;
  bool table_empty(const WorldState& s) const;
  /// Objects whose colour may be observed after `moved` leaves the table, nearest first.
  std::vector<int> revealed_objects(const WorldState& next, int moved) const;

 private:
  ModelTables tables_;
  TaskSpec task_;
  ModelParams params_;
};

struct ActionSet {
  std::vector<GraspAction> actions;
  double expected_value = 0.0;
};

/// Greedy budgeted grasp set over the belief; each grasp expands into one action per destination.
ActionSet restricted_action_set(const Belief& belief, int budget, TaskKind task, const OcclusionModel& occ = {});

}  // namespace objcomp

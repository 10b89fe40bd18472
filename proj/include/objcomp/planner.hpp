#pragma once

#include "objcomp/belief.hpp"
#include "objcomp/world_model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace objcomp {

struct PlannerConfig {
  int horizon = 3;
  int rollouts_per_action = 200;
  int particles_per_node = 100;
  int observation_branching = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ActionValue {
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct PolicyDiagnostics {
  /// Index into the model's actions; nullopt means stop.
  std::optional<std::size_t> chosen;
  /// One entry per model action; virtual actions are never evaluated at the root and keep {0,0}.
  std::vector<ActionValue> q_values;
  std::size_t rollout_count = 0;
  double wall_time = 0.0;
};

/// Weighted particles; weights sum to 1.
struct ParticleSet {
  std::vector<WorldState> states;
  std::vector<double> weights;
};

/// Merges identical states, summing their weights. Output is sorted by state.
ParticleSet merge_duplicates(const ParticleSet& particles);

/// Action maximizing the weighted one-step expected reward; nullopt (stop) when that maximum is <= 0.
std::optional<std::size_t> max_utility_action(const ParticleSet& particles, const WorldModel& model);
std::optional<std::size_t> max_utility_action(const Belief& belief, const WorldModel& model);

/// Finite-horizon lookahead over sampled outcomes and observations.
PolicyDiagnostics plan(const ParticleSet& particles, const WorldModel& model, const PlannerConfig& config);
PolicyDiagnostics plan(const Belief& belief, const WorldModel& model, const PlannerConfig& config);

/// Composition with the largest summed weight (lexicographically smallest assignment on ties).
std::size_t modal_particle(const Belief& belief);

/// Best own-grasp of a hypothesis of the modal composition (red hypotheses only when searching);
/// nullopt when none has a positive success probability.
std::optional<GraspAction> best_segmentation_action(const Belief& belief, TaskKind task, const OcclusionModel& occ = {});

}  // namespace objcomp

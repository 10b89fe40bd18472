#pragma once

#include "objcomp/belief.hpp"
#include "objcomp/generator.hpp"
#include "objcomp/grasp.hpp"
#include "objcomp/planner.hpp"
#include "objcomp/sampler.hpp"
#include "objcomp/stats.hpp"
#include "objcomp/world_model.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace objcomp {

enum class Method { best_seg, max_util, pomdp, pomdp_halluc };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
const std::vector<Method>& all_methods();

struct EpisodeConfig {
  TaskSpec task;
  SamplerConfig sampler;
  PlannerConfig planner;
  int action_budget = 10;
  /// 0 selects the task default (6 for table clearing, 12 for object search).
  int max_steps = 0;
  /// Multiplier on the simulated success probability.
  double mismatch = 1.0;
  GraspParams grasp;
  ModelParams model;

  int step_cap() const;
  void validate() const;
};

nlohmann::json episode_config_to_json(const EpisodeConfig& c);
/// Missing keys keep their defaults.
EpisodeConfig episode_config_from_json(const nlohmann::json& j);

struct StepResult {
  GraspOutcome outcome = GraspOutcome::failure;
  double reward = 0.0;
  /// True object hit by the grasp, or -1 when the contacts miss or straddle objects.
  int true_object = -1;
  bool straddled = false;
  bool blocked = false;
  double success_probability = 0.0;
  Scene next_view;
};

/// Executes `grasp` against the true world and renders the next view with `next_view_seed`.
StepResult step_world(TrueWorld& world, const Scene& current, const GraspAction& grasp,
                      std::span<const GraspRecord> history, const EpisodeConfig& config, Rng& rng,
                      std::uint64_t next_view_seed);

struct StepRecord {
  SegmentSet optimized_for;
  Location destination = Location::removed;
  std::uint64_t grasp_key = 0;
  GraspOutcome outcome = GraspOutcome::failure;
  double reward = 0.0;
  int true_object = -1;
  double success_probability = 0.0;
  // belief diagnostics
  std::size_t particles = 0;
  std::size_t hypotheses = 0;
  double ess = 0.0;
  std::int64_t cftp_horizon = 0;
  bool truncated = false;
  bool belief_retried = false;
  // planner diagnostics
  std::size_t action_count = 0;
  double q_value = 0.0;
  double q_stderr = 0.0;
  std::size_t rollouts = 0;

  bool operator==(const StepRecord&) const = default;
};

struct PhaseTimes {
  double pre_processing = 0.0;
  double belief = 0.0;
  double planning = 0.0;
};

struct EpisodeRecord {
  std::string scene_id;
  Method method = Method::best_seg;
  TaskKind task = TaskKind::table_clearing;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  double total_reward = 0.0;
  /// "stop", "empty", "max_steps" or "error".
  std::string termination;
  std::string error;
  int initial_objects = 0;
  int remaining_objects = 0;
  int red_in_red = 0;
  int nonred_in_red = 0;
  PhaseTimes times;

  bool failed() const { return termination == "error"; }
  /// Wall times are volatile and left out of equality and of the default serialization.
  bool operator==(const EpisodeRecord& o) const;
};

nlohmann::json episode_to_json(const EpisodeRecord& r, bool with_times = false);
EpisodeRecord episode_from_json(const nlohmann::json& j);

/// One closed-loop episode. Module errors end the episode with termination "error".
EpisodeRecord run_episode(const TrueWorld& world, Method method, const EpisodeConfig& config, std::uint64_t seed,
                          std::string scene_id = {});

struct MethodSummary {
  Method method = Method::best_seg;
  std::size_t episodes = 0;
  std::size_t failed = 0;
  ConfidenceInterval reward;
};

struct PairwiseTest {
  /// Index of the earlier method; the alternative is "later earns more".
  std::size_t earlier = 0;
  std::size_t later = 0;
  double p_value = 1.0;
};

struct EvaluationReport {
  std::vector<MethodSummary> methods;
  std::vector<PairwiseTest> pairwise;
};

nlohmann::json report_to_json(const EvaluationReport& r);

struct SceneSource {
  std::string id;
  TrueWorld world;
};

struct Evaluation {
  std::vector<EpisodeRecord> episodes;
  EvaluationReport report;
};

/// Runs every (scene, trial, method) episode. All methods of one (scene, trial) share the episode seed.
Evaluation evaluate_methods(std::span<const SceneSource> scenes, std::span<const Method> methods, int trials,
                            std::uint64_t seed, const EpisodeConfig& config);

/// Summary and pairwise tests for the given per-method rewards.
EvaluationReport summarize(std::span<const Method> methods, const std::vector<std::vector<double>>& rewards,
                           const std::vector<std::size_t>& failures, std::uint64_t seed);

}  // namespace objcomp

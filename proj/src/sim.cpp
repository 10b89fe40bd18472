#include "objcomp/sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

namespace objcomp {

namespace {

constexpr std::uint64_t kViewStream = 0x71E3u;
constexpr std::uint64_t kSamplerStream = 0x5A3Bu;
constexpr std::uint64_t kOutcomeStream = 0x0C70u;
constexpr std::uint64_t kPlanStream = 0x9A1Du;
constexpr std::uint64_t kBeliefStream = 0xBE11u;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::uint64_t signature_of(const std::map<SegmentId, SegmentSet>& occluders, const SegmentSet& segments) {
  SegmentSet occ;
  for (auto id : segments) {
    auto it = occluders.find(id);
    if (it != occluders.end()) occ.insert(occ.end(), it->second.begin(), it->second.end());
  }
  std::sort(occ.begin(), occ.end());
  occ.erase(std::unique(occ.begin(), occ.end()), occ.end());
  SegmentSet out;
  std::set_difference(occ.begin(), occ.end(), segments.begin(), segments.end(), std::back_inserter(out));
  return hash_segment_set(out);
}

/// Piece containing `p`; pieces of `preferred` win, then the lowest id.
const Piece* piece_at(const TrueWorld& world, const Vec3& p, const SegmentSet& preferred) {
  const Piece* best = nullptr;
  bool best_pref = false;
  for (const auto& obj : world.objects) {
    if (obj.location != Location::table) continue;
    for (const auto& piece : obj.pieces) {
      if (!piece.box.contains(p, 1e-6)) continue;
      const bool pref = std::binary_search(preferred.begin(), preferred.end(), piece.id);
      if (!best || (pref && !best_pref) || (pref == best_pref && piece.id < best->id)) {
        best = &piece;
        best_pref = pref;
      }
    }
  }
  return best;
}

double true_reward(TaskKind task, Location destination, bool is_red) {
  if (task == TaskKind::table_clearing) return 1.0;
  if (destination == Location::red_box) return is_red ? 1.0 : -1.0;
  return 0.0;
}

SegmentSet visible_segments_of(const Scene& view, const TrueWorld& world, int obj) {
  SegmentSet out;
  for (const auto& piece : world.objects[static_cast<std::size_t>(obj)].pieces)
    if (view.index_of(piece.id) >= 0) out.push_back(piece.id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::best_seg:
      return "best_seg";
    case Method::max_util:
      return "max_util";
    case Method::pomdp:
      return "pomdp";
    case Method::pomdp_halluc:
      return "pomdp_halluc";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m{Method::best_seg, Method::max_util, Method::pomdp, Method::pomdp_halluc};
  return m;
}

Method method_from_string(std::string_view s) {
  for (auto m : all_methods())
    if (to_string(m) == s) return m;
  throw Error("unknown method '" + std::string(s) + "' (valid: best_seg, max_util, pomdp, pomdp_halluc)");
}

int EpisodeConfig::step_cap() const {
  if (max_steps > 0) return max_steps;
  return task.kind == TaskKind::table_clearing ? 6 : 12;
}

void EpisodeConfig::validate() const {
  task.validate();
  sampler.validate();
  planner.validate();
  if (action_budget < 1) throw Error("episode config: action_budget must be positive");
  if (max_steps < 0) throw Error("episode config: max_steps must be non-negative");
  if (!(mismatch >= 0.0 && mismatch <= 1.0)) throw Error("episode config: mismatch must lie in [0, 1]");
  if (model.k_obs < 0) throw Error("episode config: k_obs must be non-negative");
}

nlohmann::json episode_config_to_json(const EpisodeConfig& c) {
  return {{"task", to_string(c.task.kind)},
          {"horizon", c.planner.horizon},
          {"discount", c.task.discount},
          {"n_ess_target", c.sampler.n_ess_target},
          {"n_start", c.sampler.n_start},
          {"h_size", c.sampler.h_size},
          {"t_max", c.sampler.t_max},
          {"rollouts_per_action", c.planner.rollouts_per_action},
          {"particles_per_node", c.planner.particles_per_node},
          {"observation_branching", c.planner.observation_branching},
          {"action_budget", c.action_budget},
          {"max_steps", c.max_steps},
          {"mismatch", c.mismatch},
          {"k_obs", c.model.k_obs},
          {"p_min", c.model.occ.p_min},
          {"p_max", c.model.occ.p_max}};
}

EpisodeConfig episode_config_from_json(const nlohmann::json& j) {
  EpisodeConfig c;
  if (!j.is_object()) throw Error("episode config must be a JSON object");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  if (j.contains("task")) c.task.kind = task_kind_from_string(j.at("task").get<std::string>());
  get("horizon", c.planner.horizon);
  get("discount", c.task.discount);
  get("n_ess_target", c.sampler.n_ess_target);
  get("n_start", c.sampler.n_start);
  get("h_size", c.sampler.h_size);
  get("t_max", c.sampler.t_max);
  get("rollouts_per_action", c.planner.rollouts_per_action);
  get("particles_per_node", c.planner.particles_per_node);
  get("observation_branching", c.planner.observation_branching);
  get("action_budget", c.action_budget);
  get("max_steps", c.max_steps);
  get("mismatch", c.mismatch);
  get("k_obs", c.model.k_obs);
  get("p_min", c.model.occ.p_min);
  get("p_max", c.model.occ.p_max);
  c.task.horizon = c.planner.horizon;
  return c;
}

StepResult step_world(TrueWorld& world, const Scene& current, const GraspAction& grasp,
                      std::span<const GraspRecord> history, const EpisodeConfig& config, Rng& rng,
                      std::uint64_t next_view_seed) {
  for (auto id : grasp.optimized_for)
    if (current.index_of(id) < 0) throw Error("stale action");
  StepResult r;
  const Piece* pa = piece_at(world, grasp.contact_a, grasp.optimized_for);
  const Piece* pb = piece_at(world, grasp.contact_b, grasp.optimized_for);
  const int oa = pa ? world.object_of_segment(pa->id) : -1;
  const int ob = pb ? world.object_of_segment(pb->id) : -1;
  // the draw is consumed on every path so later steps do not depend on which branch ran
  const double u = rng.uniform();
  if (oa >= 0 && oa == ob) {
    r.true_object = oa;
    const auto blockers = world.table_points_except(oa);
    r.blocked = blocked(grasp, blockers, config.grasp.finger_clearance);
    const SegmentSet target = visible_segments_of(current, world, oa);
    if (!r.blocked && !target.empty()) {
      const auto geom = make_hypothesis_geometry(current, target, config.grasp);
      const auto sig = signature_of(segment_occluders(current), grasp.optimized_for);
      r.success_probability =
          config.mismatch * grasp_success_probability(grasp, target, geom.footprint, world.visible_fraction(oa),
                                                      history, sig, blockers, config.grasp, config.model.occ);
    }
  } else if (oa >= 0 && ob >= 0) {
    r.straddled = true;
  }
  if (r.success_probability > 0.0 && u < r.success_probability) {
    r.outcome = GraspOutcome::success;
    auto& obj = world.objects[static_cast<std::size_t>(r.true_object)];
    obj.location = grasp.destination;
    r.reward = true_reward(config.task.kind, grasp.destination, obj.is_red);
  }
  r.next_view = world.view(next_view_seed);
  return r;
}

bool EpisodeRecord::operator==(const EpisodeRecord& o) const {
  return scene_id == o.scene_id && method == o.method && task == o.task && seed == o.seed && steps == o.steps &&
         total_reward == o.total_reward && termination == o.termination && error == o.error &&
         initial_objects == o.initial_objects && remaining_objects == o.remaining_objects &&
         red_in_red == o.red_in_red && nonred_in_red == o.nonred_in_red;
}

nlohmann::json episode_to_json(const EpisodeRecord& r, bool with_times) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"optimized_for", s.optimized_for},
                     {"destination", to_string(s.destination)},
                     {"grasp_key", s.grasp_key},
                     {"outcome", s.outcome == GraspOutcome::success ? "success" : "failure"},
                     {"reward", s.reward},
                     {"true_object", s.true_object},
                     {"success_probability", s.success_probability},
                     {"belief",
                      {{"particles", s.particles},
                       {"hypotheses", s.hypotheses},
                       {"ess", s.ess},
                       {"cftp_horizon", s.cftp_horizon},
                       {"truncated", s.truncated},
                       {"retried", s.belief_retried}}},
                     {"planner",
                      {{"actions", s.action_count},
                       {"q", s.q_value},
                       {"q_stderr", s.q_stderr},
                       {"rollouts", s.rollouts}}}});
  }
  nlohmann::json j{{"scene_id", r.scene_id},
                   {"method", to_string(r.method)},
                   {"task", to_string(r.task)},
                   {"seed", r.seed},
                   {"steps", std::move(steps)},
                   {"total_reward", r.total_reward},
                   {"termination", r.termination},
                   {"error", r.error},
                   {"initial_objects", r.initial_objects},
                   {"remaining_objects", r.remaining_objects},
                   {"red_in_red", r.red_in_red},
                   {"nonred_in_red", r.nonred_in_red}};
  if (with_times)
    j["wall_times"] = {{"pre_processing", r.times.pre_processing},
                       {"belief", r.times.belief},
                       {"planning", r.times.planning}};
  return j;
}

EpisodeRecord episode_from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.scene_id = j.at("scene_id").get<std::string>();
  r.method = method_from_string(j.at("method").get<std::string>());
  r.task = task_kind_from_string(j.at("task").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("steps")) {
    StepRecord st;
    st.optimized_for = s.at("optimized_for").get<SegmentSet>();
    st.destination = location_from_string(s.at("destination").get<std::string>());
    st.grasp_key = s.at("grasp_key").get<std::uint64_t>();
    st.outcome = s.at("outcome").get<std::string>() == "success" ? GraspOutcome::success : GraspOutcome::failure;
    st.reward = s.at("reward").get<double>();
    st.true_object = s.at("true_object").get<int>();
    st.success_probability = s.at("success_probability").get<double>();
    const auto& b = s.at("belief");
    st.particles = b.at("particles").get<std::size_t>();
    st.hypotheses = b.at("hypotheses").get<std::size_t>();
    st.ess = b.at("ess").get<double>();
    st.cftp_horizon = b.at("cftp_horizon").get<std::int64_t>();
    st.truncated = b.at("truncated").get<bool>();
    st.belief_retried = b.at("retried").get<bool>();
    const auto& p = s.at("planner");
    st.action_count = p.at("actions").get<std::size_t>();
    st.q_value = p.at("q").get<double>();
    st.q_stderr = p.at("q_stderr").get<double>();
    st.rollouts = p.at("rollouts").get<std::size_t>();
    r.steps.push_back(std::move(st));
  }
  r.total_reward = j.at("total_reward").get<double>();
  r.termination = j.at("termination").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.initial_objects = j.at("initial_objects").get<int>();
  r.remaining_objects = j.at("remaining_objects").get<int>();
  r.red_in_red = j.at("red_in_red").get<int>();
  r.nonred_in_red = j.at("nonred_in_red").get<int>();
  if (j.contains("wall_times")) {
    const auto& t = j.at("wall_times");
    r.times = {t.at("pre_processing").get<double>(), t.at("belief").get<double>(), t.at("planning").get<double>()};
  }
  return r;
}

namespace {

struct Selection {
  std::optional<GraspAction> grasp;
  std::size_t action_count = 0;
  double q = 0.0;
  double q_stderr = 0.0;
  std::size_t rollouts = 0;
};

Selection select_action(const Belief& belief, Method method, const EpisodeConfig& config, int steps_left,
                        std::uint64_t seed) {
  Selection sel;
  const auto kind = config.task.kind;
  const auto& occ = config.model.occ;
  if (method == Method::best_seg) {
    sel.grasp = best_segmentation_action(belief, kind, occ);
    sel.action_count = sel.grasp ? 1 : 0;
    return sel;
  }
  const auto set = restricted_action_set(belief, config.action_budget, kind, occ);
  if (set.actions.empty()) return sel;
  TaskSpec task = config.task;
  task.horizon = std::max(1, std::min(config.planner.horizon, steps_left));
  ModelParams params = config.model;
  params.reveal_actions = method == Method::pomdp_halluc;
  const auto model = WorldModel::from_catalog(*belief.catalog, set.actions, task, params);
  sel.action_count = model.action_count();
  std::optional<std::size_t> chosen;
  if (method == Method::max_util) {
    chosen = max_utility_action(belief, model);
    if (chosen) {
      for (std::size_t k = 0; k < belief.particles.size(); ++k)
        sel.q += belief.weights[k] * model.expected_reward(belief.particles[k], *chosen);
    }
  } else {
    PlannerConfig pc = config.planner;
    pc.horizon = task.horizon;
    pc.seed = seed;
    const auto d = plan(belief, model, pc);
    chosen = d.chosen;
    sel.rollouts = d.rollout_count;
    if (chosen) {
      sel.q = d.q_values[*chosen].mean;
      sel.q_stderr = d.q_values[*chosen].stderr_;
    }
  }
  // virtual actions come after the real ones and are never chosen here
  if (chosen) sel.grasp = set.actions[*chosen];
  return sel;
}

void finish(EpisodeRecord& rec, const TrueWorld& world) {
  rec.remaining_objects = world.table_object_count();
  rec.red_in_red = rec.nonred_in_red = 0;
  for (const auto& o : world.objects) {
    if (o.location != Location::red_box) continue;
    (o.is_red ? rec.red_in_red : rec.nonred_in_red)++;
  }
  rec.total_reward = 0.0;
  for (const auto& s : rec.steps) rec.total_reward += s.reward;
}

}  // namespace

EpisodeRecord run_episode(const TrueWorld& initial, Method method, const EpisodeConfig& config, std::uint64_t seed,
                          std::string scene_id) {
  config.validate();
  EpisodeRecord rec;
  rec.scene_id = std::move(scene_id);
  rec.method = method;
  rec.task = config.task.kind;
  rec.seed = seed;
  TrueWorld world = initial;
  rec.initial_objects = world.table_object_count();
  std::vector<GraspRecord> history;
  Rng outcome_rng = Rng::derived({seed, kOutcomeStream});
  Scene view = world.view(mix_keys({seed, kViewStream, 0}));
  const int cap = config.step_cap();
  rec.termination = "max_steps";
  try {
    for (int step = 0; step < cap; ++step) {
      if (view.segments.empty() || world.table_object_count() == 0) {
        rec.termination = "empty";
        break;
      }
      auto t0 = Clock::now();
      CatalogOptions copts;
      copts.grasp = config.grasp;
      auto catalog = std::make_shared<HypothesisCatalog>(std::make_shared<const Scene>(view), copts);
      rec.times.pre_processing += seconds_since(t0);

      t0 = Clock::now();
      SamplerConfig sc = config.sampler;
      sc.seed = mix_keys({seed, kSamplerStream, static_cast<std::uint64_t>(step)});
      BeliefOptions bopts;
      bopts.hallucination = method == Method::pomdp_halluc;
      bopts.seed = mix_keys({seed, kBeliefStream, static_cast<std::uint64_t>(step)});
      bopts.occ = config.model.occ;
      CompositionSet samples = sample_compositions(catalog->space(), sc);
      Belief belief;
      bool retried = false;
      try {
        belief = build_belief(catalog, samples, history, bopts);
      } catch (const BeliefCollapse&) {
        retried = true;
        sc.h_size *= 2;
        sc.seed = mix_keys({sc.seed, 2});
        samples = sample_compositions(catalog->space(), sc);
        belief = build_belief(catalog, samples, history, bopts);
      }
      rec.times.belief += seconds_since(t0);

      t0 = Clock::now();
      const auto sel = select_action(belief, method, config, cap - step,
                                     mix_keys({seed, kPlanStream, static_cast<std::uint64_t>(step)}));
      rec.times.planning += seconds_since(t0);
      if (!sel.grasp) {
        rec.termination = "stop";
        break;
      }

      StepRecord st;
      st.optimized_for = sel.grasp->optimized_for;
      st.destination = sel.grasp->destination;
      st.grasp_key = sel.grasp->key();
      st.particles = belief.particles.size();
      st.hypotheses = catalog->size();
      st.ess = samples.ess_achieved;
      st.cftp_horizon = samples.cftp_horizon;
      st.truncated = samples.truncated;
      st.belief_retried = retried;
      st.action_count = sel.action_count;
      st.q_value = sel.q;
      st.q_stderr = sel.q_stderr;
      st.rollouts = sel.rollouts;

      const auto result = step_world(world, view, *sel.grasp, history, config, outcome_rng,
                                     mix_keys({seed, kViewStream, static_cast<std::uint64_t>(step + 1)}));
      st.outcome = result.outcome;
      st.reward = result.reward;
      st.true_object = result.true_object;
      st.success_probability = result.success_probability;

      GraspRecord gr;
      gr.grasp = *sel.grasp;
      gr.outcome = result.outcome;
      gr.optimized_for = sel.grasp->optimized_for;
      gr.occlusion_signature = catalog->occlusion_signature(sel.grasp->optimized_for);
      if (result.outcome == GraspOutcome::success) gr.removed_segments = visible_segments_of(view, world, result.true_object);
      history.push_back(std::move(gr));
      rec.steps.push_back(std::move(st));
      view = result.next_view;
      if (step + 1 == cap) break;
    }
    if (rec.termination == "max_steps" && (view.segments.empty() || world.table_object_count() == 0))
      rec.termination = "empty";
  } catch (const std::exception& e) {
    rec.termination = "error";
    rec.error = e.what();
  }
  finish(rec, world);
  return rec;
}

EvaluationReport summarize(std::span<const Method> methods, const std::vector<std::vector<double>>& rewards,
                           const std::vector<std::size_t>& failures, std::uint64_t seed) {
  EvaluationReport rep;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    s.method = methods[m];
    s.episodes = rewards[m].size();
    s.failed = failures[m];
    s.reward = bootstrap_ci(rewards[m], mix_keys({seed, 0xB007u, m}));
    rep.methods.push_back(s);
  }
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      PairwiseTest t{i, j, 1.0};
      if (rewards[i].size() >= 3 && rewards[j].size() >= 3) t.p_value = mann_whitney_u(rewards[j], rewards[i]);
      rep.pairwise.push_back(t);
    }
  }
  return rep;
}

Evaluation evaluate_methods(std::span<const SceneSource> scenes, std::span<const Method> methods, int trials,
                            std::uint64_t seed, const EpisodeConfig& config) {
  if (methods.size() < 2) throw Error("evaluate_methods: at least two methods are required");
  if (trials < 1) throw Error("evaluate_methods: trials must be positive");
  config.validate();
  Evaluation ev;
  std::vector<std::vector<double>> rewards(methods.size());
  std::vector<std::size_t> failures(methods.size(), 0);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ep_seed = mix_keys({seed, s, static_cast<std::uint64_t>(t)});
      for (std::size_t m = 0; m < methods.size(); ++m) {
        auto rec = run_episode(scenes[s].world, methods[m], config, ep_seed, scenes[s].id);
        rewards[m].push_back(rec.total_reward);
        if (rec.failed()) ++failures[m];
        ev.episodes.push_back(std::move(rec));
      }
    }
  }
  ev.report = summarize(methods, rewards, failures, seed);
  return ev;
}

nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : r.methods)
    methods.push_back({{"method", to_string(m.method)},
                       {"episodes", m.episodes},
                       {"failed", m.failed},
                       {"mean_reward", m.reward.mean},
                       {"ci95", {m.reward.lo, m.reward.hi}}});
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairwise)
    pairs.push_back({{"alternative", std::string(to_string(r.methods[p.later].method)) + " > " +
                                         std::string(to_string(r.methods[p.earlier].method))},
                     {"p_value", p.p_value}});
  return {{"methods", std::move(methods)}, {"pairwise", std::move(pairs)}};
}

}  // namespace objcomp

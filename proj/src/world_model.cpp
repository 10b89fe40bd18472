#include "objcomp/world_model.hpp"

#include <algorithm>
#include <cmath>

namespace objcomp {

std::string_view to_string(TaskKind k) {
  return k == TaskKind::table_clearing ? "table_clearing" : "object_search";
}

TaskKind task_kind_from_string(std::string_view s) {
  if (s == "table_clearing") return TaskKind::table_clearing;
  if (s == "object_search") return TaskKind::object_search;
  throw Error("unknown task '" + std::string(s) + "' (expected table_clearing or object_search)");
}

void TaskSpec::validate() const {
  if (horizon < 1) throw Error("task: horizon must be at least 1");
  if (!(discount > 0.0 && discount <= 1.0)) throw Error("task: discount must lie in (0,1]");
}

std::vector<Location> task_destinations(TaskKind kind) {
  if (kind == TaskKind::table_clearing) return {Location::removed};
  return {Location::red_box, Location::green_box};
}

double p_correct(double v, const ModelParams& params) {
  return 1.0 - 0.5 * std::exp(params.a1 + params.a2 * (100.0 * v));
}

WorldModel::WorldModel(ModelTables tables, TaskSpec task, ModelParams params)
    : tables_(std::move(tables)), task_(task), params_(params) {
  task_.validate();
  const std::size_t n_actions = tables_.destination.size();
  if (tables_.quality.size() != n_actions || tables_.block.size() != n_actions || tables_.key.size() != n_actions ||
      tables_.reveal.size() != n_actions)
    throw Error("world model: action tables have inconsistent lengths");
  const std::size_t n_hyp = tables_.hyp_mask.size();
  if (tables_.hyp_occluders.size() != n_hyp || tables_.hyp_visible.size() != n_hyp)
    throw Error("world model: hypothesis tables have inconsistent lengths");
  for (const auto& row : tables_.quality)
    if (row.size() != n_hyp) throw Error("world model: quality row length differs from hypothesis count");
}

WorldModel WorldModel::from_catalog(const HypothesisCatalog& catalog, const std::vector<GraspAction>& actions,
                                    TaskSpec task, ModelParams params) {
  ModelTables t;
  const std::size_t n = catalog.size();
  for (std::size_t h = 0; h < n; ++h) {
    t.hyp_mask.push_back(catalog[h].mask);
    t.hyp_occluders.push_back(catalog[h].occluders);
    t.hyp_visible.push_back(catalog[h].visible_fraction);
  }
  for (const auto& g : actions) {
    std::vector<double> row(n);
    for (std::size_t h = 0; h < n; ++h)
      row[h] = grasp_quality(g, catalog[h].segments, catalog[h].footprint, catalog.options().grasp);
    t.quality.push_back(std::move(row));
    t.block.push_back(catalog.block_mask(g));
    t.destination.push_back(g.destination);
    t.key.push_back(g.key());
    t.reveal.push_back(false);
  }
  if (params.reveal_actions) {
    for (auto d : task_destinations(task.kind)) {
      t.quality.emplace_back(n, 0.0);
      t.block.emplace_back(catalog.space().segment_count());
      t.destination.push_back(d);
      t.key.push_back(mix_keys({0x5EEDu, static_cast<std::uint64_t>(d)}));
      t.reveal.push_back(true);
    }
  }
  return WorldModel(std::move(t), task, params);
}

double WorldModel::success_probability(const WorldState& s, std::size_t a, std::size_t object) const {
  const auto& o = s.objects[object];
  if (o.location != Location::table) return 0.0;
  if (std::find(o.failed_grasps.begin(), o.failed_grasps.end(), tables_.key[a]) != o.failed_grasps.end()) return 0.0;
  if (tables_.reveal[a]) {
    // a hidden object can be grasped only after its occluder has left the table
    if (!o.hallucinated()) return 0.0;
    if (o.parent >= 0 && s.objects[static_cast<std::size_t>(o.parent)].location == Location::table) return 0.0;
    return params_.occ(o.visible_fraction);
  }
  if (o.hallucinated()) return 0.0;
  const auto h = static_cast<std::size_t>(o.hypothesis);
  const double q = tables_.quality[a][h];
  if (q <= 0.0) return 0.0;
  const auto& block = tables_.block[a];
  if (block.any()) {
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      const auto& other = s.objects[k];
      if (k == object || other.hallucinated() || other.location != Location::table) continue;
      if (tables_.hyp_mask[static_cast<std::size_t>(other.hypothesis)].intersects(block)) return 0.0;
    }
  }
  return q * params_.occ(o.visible_fraction);
}

std::pair<int, double> WorldModel::target(const WorldState& s, std::size_t a) const {
  int best = -1;
  double best_p = 0.0;
  for (std::size_t k = 0; k < s.objects.size(); ++k) {
    const double p = success_probability(s, a, k);
    if (p > best_p) {
      best_p = p;
      best = static_cast<int>(k);
    }
  }
  return {best, best_p};
}

std::vector<int> WorldModel::revealed_objects(const WorldState& next, int moved) const {
  std::vector<int> out;
  if (moved < 0) return out;
  const auto& m = next.objects[static_cast<std::size_t>(moved)];
  for (std::size_t k = 0; k < next.objects.size(); ++k) {
    const auto& o = next.objects[k];
    if (o.hallucinated() && o.parent == moved && o.location == Location::table) out.push_back(static_cast<int>(k));
  }
  if (m.hallucinated()) return out;
  const auto& moved_mask = tables_.hyp_mask[static_cast<std::size_t>(m.hypothesis)];
  std::vector<int> behind;
  for (std::size_t k = 0; k < next.objects.size(); ++k) {
    const auto& o = next.objects[k];
    if (static_cast<int>(k) == moved || o.hallucinated() || o.location != Location::table) continue;
    if (tables_.hyp_occluders[static_cast<std::size_t>(o.hypothesis)].intersects(moved_mask))
      behind.push_back(static_cast<int>(k));
  }
  std::sort(behind.begin(), behind.end(),
            [&](int x, int y) { return object_key(next, x) < object_key(next, y); });
  out.insert(out.end(), behind.begin(), behind.end());
  return out;
}

Transition WorldModel::transition(const WorldState& s, std::size_t a, bool success) const {
  Transition t;
  t.next = s;
  const auto [target, p] = this->target(s, a);
  t.target = target;
  t.success_probability = p;
  if (target < 0) return t;  // no object can be grasped: deterministic failure
  auto& objs = t.next.objects;
  auto& moved = objs[static_cast<std::size_t>(target)];
  if (!success) {
    moved.failed_grasps.push_back(tables_.key[a]);
    return t;
  }
  t.success = true;
  moved.location = tables_.destination[a];
  if (!moved.hallucinated()) {
    const auto& mask = tables_.hyp_mask[static_cast<std::size_t>(moved.hypothesis)];
    for (std::size_t k = 0; k < objs.size(); ++k) {
      auto& o = objs[k];
      if (static_cast<int>(k) == target || o.hallucinated() || o.location != Location::table) continue;
      const auto h = static_cast<std::size_t>(o.hypothesis);
      const auto& occ = tables_.hyp_occluders[h];
      const std::size_t shared = occ.intersection_count(mask);
      if (shared == 0) continue;
      const double share = static_cast<double>(shared) / static_cast<double>(occ.count());
      o.visible_fraction = std::min(1.0, o.visible_fraction + (1.0 - tables_.hyp_visible[h]) * share);
      o.failed_grasps.clear();
    }
  }
  for (auto& o : objs)
    if (o.hallucinated() && o.parent == target) o.visible_fraction = 1.0;
  return t;
}

Transition WorldModel::sample_transition(const WorldState& s, std::size_t a, Rng& rng) const {
  const auto [target, p] = this->target(s, a);
  const bool success = target >= 0 && rng.bernoulli(p);
  return transition(s, a, success);
}

Observation WorldModel::sample_observation(const Transition& t, Rng& rng) const {
  Observation o;
  o.success = t.success;
  if (!t.success) return o;
  o.moved = object_key(t.next, t.target);
  auto revealed = revealed_objects(t.next, t.target);
  if (revealed.size() > static_cast<std::size_t>(std::max(0, params_.k_obs)))
    revealed.resize(static_cast<std::size_t>(std::max(0, params_.k_obs)));
  for (int k : revealed) {
    const auto& obj = t.next.objects[static_cast<std::size_t>(k)];
    const bool correct = rng.bernoulli(p_correct(obj.visible_fraction, params_));
    o.colors.push_back({object_key(t.next, k), correct ? obj.is_red : !obj.is_red});
  }
  return o;
}

double WorldModel::observation_probability(const Observation& o, const Transition& t) const {
  if (o.success != t.success) return 0.0;
  const std::int64_t moved = t.success ? object_key(t.next, t.target) : Observation::kNone;
  if (o.moved != moved) return 0.0;
  double p = 1.0;
  for (const auto& c : o.colors) {
    int found = -1;
    for (std::size_t k = 0; k < t.next.objects.size(); ++k) {
      if (t.next.objects[k].location == Location::table && object_key(t.next, static_cast<int>(k)) == c.object) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0) return 0.0;
    const auto& obj = t.next.objects[static_cast<std::size_t>(found)];
    const double pc = p_correct(obj.visible_fraction, params_);
    p *= obj.is_red == c.observed_red ? pc : 1.0 - pc;
  }
  return p;
}

double WorldModel::success_reward(const WorldState& s, std::size_t a, int object) const {
  if (task_.kind == TaskKind::table_clearing) return 1.0;
  switch (tables_.destination[a]) {
    case Location::red_box:
      return s.objects[static_cast<std::size_t>(object)].is_red ? 1.0 : -1.0;
    default:
      return 0.0;
  }
}

double WorldModel::reward(const WorldState& before, std::size_t a, const Transition& t) const {
  if (!t.success) return 0.0;
  return success_reward(before, a, t.target);
}

double WorldModel::expected_reward(const WorldState& s, std::size_t a) const {
  const auto [target, p] = this->target(s, a);
  if (target < 0) return 0.0;
  return p * success_reward(s, a, target);
}

std::int64_t WorldModel::object_key(const WorldState& s, int object) const {
  const auto& o = s.objects[static_cast<std::size_t>(object)];
  if (!o.hallucinated()) return o.hypothesis;
  const auto& parent = s.objects[static_cast<std::size_t>(o.parent)];
  return -2 - static_cast<std::int64_t>(parent.hypothesis);
}

bool WorldModel::table_empty(const WorldState& s) const {
  return std::none_of(s.objects.begin(), s.objects.end(),
                      [](const ObjectState& o) { return o.location == Location::table; });
}

ActionSet restricted_action_set(const Belief& belief, int budget, TaskKind task, const OcclusionModel& occ) {
  if (budget < 1) throw Error("restricted_action_set: budget must be at least 1");
  const auto& cat = *belief.catalog;
  std::vector<double> prob(cat.size(), 0.0);
  std::vector<const ObjectState*> example(cat.size(), nullptr);
  for (std::size_t k = 0; k < belief.particles.size(); ++k) {
    for (const auto& o : belief.particles[k].objects) {
      if (o.hallucinated() || o.location != Location::table) continue;
      prob[static_cast<std::size_t>(o.hypothesis)] += belief.weights[k];
      if (!example[static_cast<std::size_t>(o.hypothesis)]) example[static_cast<std::size_t>(o.hypothesis)] = &o;
    }
  }
  std::vector<std::size_t> active;
  for (std::size_t h = 0; h < cat.size(); ++h)
    if (prob[h] > 0.0) active.push_back(h);

  std::vector<const GraspAction*> candidates;
  for (auto h : active) {
    const auto& g = cat[h].grasp;
    if (!g) continue;
    const auto& failed = example[h]->failed_grasps;
    if (std::find(failed.begin(), failed.end(), g->key()) != failed.end()) continue;
    candidates.push_back(&*g);
  }
  std::vector<std::vector<double>> success;
  success.reserve(candidates.size());
  std::vector<double> p_active;
  for (auto h : active) p_active.push_back(prob[h]);
  for (const auto* g : candidates) {
    const auto block = cat.block_mask(*g);
    std::vector<double> row;
    row.reserve(active.size());
    for (auto h : active) row.push_back(hypothesis_success(cat, *g, block, static_cast<int>(h), occ));
    success.push_back(std::move(row));
  }
  const auto sel = greedy_action_selection(success, p_active, budget);
  ActionSet out;
  out.expected_value = sel.expected_value;
  for (auto c : sel.chosen)
    for (auto d : task_destinations(task)) out.actions.push_back(candidates[c]->with_destination(d));
  return out;
}

}  // namespace objcomp

#include "objcomp/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace objcomp {

void PlannerConfig::validate() const {
  if (horizon < 1) throw Error("planner config: horizon must be at least 1");
  if (rollouts_per_action < 1) throw Error("planner config: rollouts_per_action must be positive");
  if (particles_per_node < 1) throw Error("planner config: particles_per_node must be positive");
  if (observation_branching < 1) throw Error("planner config: observation_branching must be positive");
}

ParticleSet merge_duplicates(const ParticleSet& particles) {
  std::vector<std::size_t> order(particles.states.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return particles.states[a] < particles.states[b];
  });
  ParticleSet out;
  for (auto i : order) {
    if (!out.states.empty() && out.states.back() == particles.states[i]) {
      out.weights.back() += particles.weights[i];
    } else {
      out.states.push_back(particles.states[i]);
      out.weights.push_back(particles.weights[i]);
    }
  }
  return out;
}

namespace {

ParticleSet from_belief(const Belief& belief) { return {belief.particles, belief.weights}; }

std::optional<std::size_t> best_immediate(const ParticleSet& node, const WorldModel& model, bool allow_virtual) {
  std::optional<std::size_t> best;
  double best_v = 0.0;
  for (std::size_t a = 0; a < model.action_count(); ++a) {
    if (model.is_virtual(a) && !allow_virtual) continue;
    double v = 0.0;
    for (std::size_t i = 0; i < node.states.size(); ++i) v += node.weights[i] * model.expected_reward(node.states[i], a);
    if (v > best_v + 1e-12) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

class Search {
 public:
  Search(const WorldModel& model, const PlannerConfig& config) : model_(model), config_(config) {}

  ParticleSet prepare(const ParticleSet& node, int cap, std::uint64_t path) const {
    ParticleSet merged = merge_duplicates(node);
    if (merged.states.size() <= static_cast<std::size_t>(cap)) return merged;
    // systematic resampling to `cap` equally weighted particles
    ParticleSet out;
    const double step = 1.0 / cap;
    double u = counter_uniform({config_.seed, path, 0x5Au}) * step;
    double acc = merged.weights[0];
    std::size_t i = 0;
    for (int k = 0; k < cap; ++k) {
      while (u > acc && i + 1 < merged.states.size()) acc += merged.weights[++i];
      out.states.push_back(merged.states[i]);
      out.weights.push_back(step);
      u += step;
    }
    return merge_duplicates(out);
  }

  double value(const ParticleSet& raw, int left, int depth, std::uint64_t path, bool greedy) {
    if (left <= 0) return 0.0;
    const ParticleSet node = prepare(raw, config_.particles_per_node, path);
    if (greedy || depth >= 2) {
      const auto a = best_immediate(node, model_, true);
      if (!a) return 0.0;
      return std::max(0.0, q_value(node, *a, left, depth, path, nullptr));
    }
    double best = 0.0;
    for (std::size_t a = 0; a < model_.action_count(); ++a)
      best = std::max(best, q_value(node, a, left, depth, path, nullptr));
    return best;
  }

  double q_value(const ParticleSet& node, std::size_t a, int left, int depth, std::uint64_t path, ActionValue* stats) {
    struct Sub {
      Transition success, failure;
      double p = 0.0;
      double reward = 0.0;
      int c_success = -1, c_failure = -1;
    };
    const std::size_t n = node.states.size();
    std::vector<Sub> subs(n);
    double immediate = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = subs[i];
      const auto [target, p] = model_.target(node.states[i], a);
      s.p = p;
      if (target >= 0 && p > 0.0) s.reward = model_.success_reward(node.states[i], a, target);
      immediate += node.weights[i] * p * s.reward;
      mass += node.weights[i] * p;
      rollouts_ += 2;
    }
    if (mass <= 0.0) {
      // the action cannot succeed anywhere in this node
      if (stats) *stats = {0.0, 0.0};
      return 0.0;
    }
    std::vector<double> child_value;
    if (left > 1) {
      std::map<Observation, ParticleSet> clusters;
      std::vector<std::pair<Observation, Observation>> keys(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto& s = subs[i];
        const auto& st = node.states[i];
        if (s.p > 0.0) {
          s.success = model_.transition(st, a, true);
          Rng rng = Rng::derived({config_.seed, path, a, i});
          keys[i].first = model_.sample_observation(s.success, rng);
          auto& c = clusters[keys[i].first];
          c.states.push_back(s.success.next);
          c.weights.push_back(node.weights[i] * s.p);
        }
        if (s.p < 1.0) {
          s.failure = model_.transition(st, a, false);
          keys[i].second = Observation{};
          auto& c = clusters[keys[i].second];
          c.states.push_back(s.failure.next);
          c.weights.push_back(node.weights[i] * (1.0 - s.p));
        }
      }
      // rank clusters by probability mass; the heaviest are expanded, the rest continue greedily
      std::vector<std::pair<double, const Observation*>> ranked;
      for (auto& [obs, c] : clusters) {
        const double m = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
        ranked.emplace_back(m, &obs);
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
      std::map<Observation, double> values;
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        auto& c = clusters[*ranked[r].second];
        const double m = ranked[r].first;
        if (m <= 0.0) {
          values[*ranked[r].second] = 0.0;
          continue;
        }
        for (auto& w : c.weights) w /= m;
        const bool greedy = r >= static_cast<std::size_t>(config_.observation_branching);
        values[*ranked[r].second] = value(c, left - 1, depth + 1, mix_keys({path, a, r}), greedy);
      }
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        if (subs[i].p > 0.0) g += subs[i].p * values[keys[i].first];
        if (subs[i].p < 1.0) g += (1.0 - subs[i].p) * values[keys[i].second];
        child_value.push_back(g);
      }
    }
    const double gamma = model_.task().discount;
    double q = immediate;
    std::vector<double> returns(n);
    for (std::size_t i = 0; i < n; ++i) {
      returns[i] = subs[i].p * subs[i].reward + (left > 1 ? gamma * child_value[i] : 0.0);
      if (left > 1) q += node.weights[i] * gamma * child_value[i];
    }
    if (stats) {
      double var = 0.0, w2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        var += node.weights[i] * (returns[i] - q) * (returns[i] - q);
        w2 += node.weights[i] * node.weights[i];
      }
      stats->mean = q;
      stats->stderr_ = std::sqrt(std::max(0.0, var) * w2);
    }
    return q;
  }

  std::size_t rollouts() const { return rollouts_; }

 private:
  const WorldModel& model_;
  const PlannerConfig& config_;
  std::size_t rollouts_ = 0;
};

}  // namespace

std::optional<std::size_t> max_utility_action(const ParticleSet& particles, const WorldModel& model) {
  return best_immediate(particles, model, false);
}

std::optional<std::size_t> max_utility_action(const Belief& belief, const WorldModel& model) {
  return max_utility_action(from_belief(belief), model);
}

PolicyDiagnostics plan(const ParticleSet& particles, const WorldModel& model, const PlannerConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  PolicyDiagnostics d;
  d.q_values.assign(model.action_count(), ActionValue{});
  Search search(model, config);
  const std::uint64_t root = mix_keys({config.seed, 0x7007u});
  const ParticleSet node = search.prepare(particles, config.rollouts_per_action, root);
  const int horizon = std::min(config.horizon, model.task().horizon);
  double best = 0.0;
  for (std::size_t a = 0; a < model.action_count(); ++a) {
    if (model.is_virtual(a)) continue;
    search.q_value(node, a, horizon, 0, root, &d.q_values[a]);
    if (d.q_values[a].mean > best + 1e-12) {
      best = d.q_values[a].mean;
      d.chosen = a;
    }
  }
  d.rollout_count = search.rollouts();
  d.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

PolicyDiagnostics plan(const Belief& belief, const WorldModel& model, const PlannerConfig& config) {
  return plan(from_belief(belief), model, config);
}

std::size_t modal_particle(const Belief& belief) {
  if (belief.particles.empty()) throw Error("modal_particle: empty belief");
  std::map<EdgeAssignment, std::pair<double, std::size_t>> mass;
  for (std::size_t k = 0; k < belief.sources.size(); ++k) {
    auto [it, fresh] = mass.try_emplace(belief.sources[k], 0.0, k);
    it->second.first += belief.weights[k];
  }
  // map order is lexicographic, so the first maximum is the smallest assignment
  double best = -1.0;
  std::size_t idx = 0;
  for (const auto& [src, v] : mass) {
    if (v.first > best + 1e-12) {
      best = v.first;
      idx = v.second;
    }
  }
  return idx;
}

std::optional<GraspAction> best_segmentation_action(const Belief& belief, TaskKind task, const OcclusionModel& occ) {
  const auto& cat = *belief.catalog;
  const auto& state = belief.particles[modal_particle(belief)];
  std::optional<GraspAction> best;
  double best_p = 0.0;
  for (const auto& o : state.objects) {
    if (o.hallucinated() || o.location != Location::table) continue;
    const auto& h = cat[static_cast<std::size_t>(o.hypothesis)];
    if (task == TaskKind::object_search && !h.is_red) continue;
    if (!h.grasp) continue;
    if (std::find(o.failed_grasps.begin(), o.failed_grasps.end(), h.grasp->key()) != o.failed_grasps.end()) continue;
    const auto block = cat.block_mask(*h.grasp);
    if (block.intersects_except(block, h.mask)) continue;
    const double p = occ(o.visible_fraction);
    if (p > best_p) {
      best_p = p;
      best = h.grasp->with_destination(task == TaskKind::object_search ? Location::red_box : Location::removed);
    }
  }
  return best;
}

}  // namespace objcomp

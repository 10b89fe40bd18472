#include "objcomp/belief.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace objcomp {

namespace {

constexpr std::uint64_t kHallucinationStream = 0xA11Cu;

SegmentSet ids_of(const SegmentMask& mask, const CompositionSpace& space) {
  SegmentSet ids;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) ids.push_back(space.segment_id(static_cast<int>(i)));
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Caches per-record block masks and success probabilities across compositions.
class HistoryEvaluator {
 public:
  HistoryEvaluator(const HypothesisCatalog& catalog, std::span<const GraspRecord> history, const OcclusionModel& occ)
      : catalog_(catalog), records_(unique_records(history)), occ_(occ) {
    for (const auto& r : records_) {
      blocks_.push_back(catalog.block_mask(r.grasp));
      if (r.outcome == GraspOutcome::success && catalog.contains_all(r.removed_segments))
        removed_.push_back(catalog.mask_of(r.removed_segments));
      else
        removed_.emplace_back();
    }
  }

  double weight(std::span<const int> hypotheses) {
    double w = 1.0;
    for (std::size_t k = 0; k < records_.size() && w > 0.0; ++k) {
      const auto& r = records_[k];
      if (r.outcome == GraspOutcome::failure) {
        for (int h : hypotheses) w *= 1.0 - success(k, h);
      } else {
        if (removed_[k].empty()) continue;  // the removed object is no longer part of the scene
        const auto it = std::find_if(hypotheses.begin(), hypotheses.end(),
                                     [&](int h) { return catalog_[static_cast<std::size_t>(h)].mask == removed_[k]; });
        w *= it == hypotheses.end() ? 0.0 : success(k, *it);
      }
    }
    return w;
  }

 private:
  double success(std::size_t record, int h) {
    const auto key = std::make_pair(record, h);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double p = hypothesis_success(catalog_, records_[record].grasp, blocks_[record], h, occ_);
    cache_.emplace(key, p);
    return p;
  }

  const HypothesisCatalog& catalog_;
  std::vector<GraspRecord> records_;
  OcclusionModel occ_;
  std::vector<SegmentMask> blocks_;
  std::vector<SegmentMask> removed_;
  std::map<std::pair<std::size_t, int>, double> cache_;
};

}  // namespace

HypothesisCatalog::HypothesisCatalog(std::shared_ptr<const Scene> scene, const CatalogOptions& options)
    : scene_(std::move(scene)), options_(options), space_(*scene_, options.default_cross_prior) {
  hidden_ = hidden_volume(*scene_, options_.voxels);
  const auto occluders = segment_occluders(*scene_, options_.occluder_radius);
  segment_occluders_.assign(space_.segment_count(), SegmentMask(space_.segment_count()));
  for (const auto& [id, occ] : occluders) {
    auto& m = segment_occluders_[static_cast<std::size_t>(space_.dense_index(id))];
    for (auto o : occ) m.set(static_cast<std::size_t>(space_.dense_index(o)));
  }
}

SegmentMask HypothesisCatalog::mask_of(const SegmentSet& segments) const {
  SegmentMask m(space_.segment_count());
  for (auto id : segments) {
    const int i = space_.dense_index(id);
    if (i < 0) throw Error("segment " + std::to_string(id) + " is not part of the scene");
    m.set(static_cast<std::size_t>(i));
  }
  return m;
}

bool HypothesisCatalog::contains_all(const SegmentSet& segments) const {
  return std::all_of(segments.begin(), segments.end(), [&](SegmentId id) { return space_.dense_index(id) >= 0; });
}

int HypothesisCatalog::find(const SegmentMask& mask) const {
  auto it = index_.find(mask);
  return it == index_.end() ? -1 : it->second;
}

int HypothesisCatalog::intern(const SegmentMask& mask) {
  if (auto it = index_.find(mask); it != index_.end()) return it->second;
  if (!mask.any()) throw Error("hypothesis must contain at least one segment");
  Hypothesis h;
  h.mask = mask;
  h.segments = ids_of(mask, space_);
  auto geom = make_hypothesis_geometry(*scene_, h.segments, options_.grasp);
  h.red_fraction = geom.red_fraction;
  h.is_red = geom.red_fraction >= 0.5;
  h.visible_fraction = geom.visible_fraction;
  h.grasp = std::move(geom.grasp);
  h.footprint = std::move(geom.footprint);
  h.occluders = SegmentMask(space_.segment_count());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    h.occluders |= segment_occluders_[i];
    h.hidden_volume += hidden_.per_segment_hidden.at(space_.segment_id(static_cast<int>(i)));
  }
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) h.occluders.set(i, false);
  h.occlusion_signature = hash_segment_set(ids_of(h.occluders, space_));
  entries_.push_back(std::move(h));
  const int idx = static_cast<int>(entries_.size()) - 1;
  index_.emplace(mask, idx);
  return idx;
}

SegmentMask HypothesisCatalog::block_mask(const GraspAction& grasp) const {
  SegmentMask m(space_.segment_count());
  const double r2 = options_.grasp.finger_clearance * options_.grasp.finger_clearance;
  for (std::size_t i = 0; i < scene_->segments.size(); ++i) {
    const auto& s = scene_->segments[i];
    const int dense = space_.dense_index(s.id);
    for (const auto& p : s.points) {
      bool hit = false;
      for (const Vec3* c : {&grasp.contact_a, &grasp.contact_b}) {
        if (p.z() > c->z() + 1e-9 && (Vec2(p.x(), p.y()) - Vec2(c->x(), c->y())).squaredNorm() < r2) hit = true;
      }
      if (hit) {
        m.set(static_cast<std::size_t>(dense));
        break;
      }
    }
  }
  return m;
}

std::uint64_t HypothesisCatalog::occlusion_signature(const SegmentSet& segments) const {
  SegmentMask own(space_.segment_count());
  for (auto id : segments)
    if (const int i = space_.dense_index(id); i >= 0) own.set(static_cast<std::size_t>(i));
  SegmentMask occ(space_.segment_count());
  for (std::size_t i = 0; i < own.size(); ++i)
    if (own[i]) occ |= segment_occluders_[i];
  for (std::size_t i = 0; i < own.size(); ++i)
    if (own[i]) occ.set(i, false);
  return hash_segment_set(ids_of(occ, space_));
}

const std::vector<int>& HypothesisCatalog::hypotheses_of(const EdgeAssignment& assignment) {
  if (auto it = compositions_.find(assignment); it != compositions_.end()) return it->second;
  const auto labels = component_labels(assignment, space_);
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<SegmentMask> masks(static_cast<std::size_t>(k), SegmentMask(space_.segment_count()));
  for (std::size_t i = 0; i < labels.size(); ++i) masks[static_cast<std::size_t>(labels[i])].set(i);
  std::vector<int> hyps;
  hyps.reserve(masks.size());
  for (const auto& m : masks) hyps.push_back(intern(m));
  return compositions_.emplace(assignment, std::move(hyps)).first->second;
}

double hypothesis_success(const HypothesisCatalog& catalog, const GraspAction& grasp, const SegmentMask& block, int h,
                          const OcclusionModel& occ) {
  const auto& hyp = catalog[static_cast<std::size_t>(h)];
  if (block.intersects_except(block, hyp.mask)) return 0.0;
  return grasp_quality(grasp, hyp.segments, hyp.footprint, catalog.options().grasp) * occ(hyp.visible_fraction);
}

double composition_weight(const HypothesisCatalog& catalog, std::span<const int> hypotheses,
                          std::span<const GraspRecord> history, const OcclusionModel& occ) {
  if (history.empty()) return 1.0;
  HistoryEvaluator eval(catalog, history, occ);
  return eval.weight(hypotheses);
}

std::vector<double> expected_hidden_objects(const HypothesisCatalog& catalog, std::span<const int> hypotheses,
                                            double n_objects) {
  const double v_visible = catalog.hidden().v_visible;
  if (!(v_visible > 0.0)) throw Error("expected_hidden_objects: visible volume must be positive");
  const double density = std::max(1.0, n_objects) / v_visible;
  std::vector<double> out;
  out.reserve(hypotheses.size());
  for (int h : hypotheses) out.push_back(density * catalog[static_cast<std::size_t>(h)].hidden_volume);
  return out;
}

double hidden_object_probability(double n) {
  if (!(n > 0.0)) return 0.0;
  const double z = (1.0 - n) / std::sqrt(n / 4.0);
  // 1 - Phi(z)
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

WorldState hallucinate(const WorldState& particle, std::span<const double> n_map, double red_prior, Rng& rng) {
  if (!(red_prior >= 0.2 - 1e-12 && red_prior <= 0.8 + 1e-12)) throw Error("hallucinate: red_prior must lie in [0.2, 0.8]");
  WorldState out = particle;
  const std::size_t n = particle.objects.size();
  if (n_map.size() != n) throw Error("hallucinate: one expected count per object required");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = particle.objects[i];
    if (o.hallucinated() || o.location != Location::table) continue;
    if (!rng.bernoulli(hidden_object_probability(n_map[i]))) continue;
    ObjectState hidden;
    hidden.hypothesis = kHallucinated;
    hidden.location = Location::table;
    hidden.is_red = rng.bernoulli(red_prior);
    hidden.visible_fraction = 0.0;
    hidden.parent = static_cast<int>(i);
    out.objects.push_back(std::move(hidden));
  }
  return out;
}

Belief build_belief(std::shared_ptr<HypothesisCatalog> catalog, const CompositionSet& samples,
                    std::span<const GraspRecord> history, const BeliefOptions& options) {
  if (samples.samples.empty()) throw Error("build_belief: empty composition set");
  Belief b;
  b.catalog = catalog;
  auto& cat = *catalog;

  HistoryEvaluator eval(cat, history, options.occ);
  std::vector<std::uint64_t> failed_keys;
  for (const auto& r : unique_records(history)) {
    if (r.outcome != GraspOutcome::failure || !cat.contains_all(r.optimized_for)) continue;
    if (cat.occlusion_signature(r.optimized_for) == r.occlusion_signature) failed_keys.push_back(r.grasp.key());
  }

  std::unordered_map<EdgeAssignment, double, BitsetHash> weight_cache;
  double total = 0.0, hyp_count = 0.0, red_share = 0.0;
  b.particles.reserve(samples.samples.size());
  for (const auto& s : samples.samples) {
    const auto& hyps = cat.hypotheses_of(s);
    auto [it, fresh] = weight_cache.try_emplace(s, 0.0);
    if (fresh) it->second = eval.weight(hyps);
    WorldState ws;
    ws.objects.reserve(hyps.size());
    std::size_t reds = 0;
    for (int h : hyps) {
      const auto& hyp = cat[static_cast<std::size_t>(h)];
      ObjectState o;
      o.hypothesis = h;
      o.is_red = hyp.is_red;
      o.visible_fraction = hyp.visible_fraction;
      o.failed_grasps = failed_keys;
      reds += hyp.is_red ? 1 : 0;
      ws.objects.push_back(std::move(o));
    }
    hyp_count += static_cast<double>(hyps.size());
    red_share += hyps.empty() ? 0.0 : static_cast<double>(reds) / static_cast<double>(hyps.size());
    b.particles.push_back(std::move(ws));
    b.weights.push_back(it->second);
    b.sources.push_back(s);
    total += it->second;
  }
  if (!(total > 0.0)) throw BeliefCollapse();
  for (auto& w : b.weights) w /= total;

  if (options.hallucination) {
    const double m = static_cast<double>(samples.samples.size());
    const double n_objects = std::max(1.0, hyp_count / m);
    const double red_prior = rescale_red_prior(red_share / m);
    for (std::size_t k = 0; k < b.particles.size(); ++k) {
      std::vector<int> hyps;
      for (const auto& o : b.particles[k].objects) hyps.push_back(o.hypothesis);
      const auto n_map = expected_hidden_objects(cat, hyps, n_objects);
      Rng rng = Rng::derived({options.seed, kHallucinationStream, k});
      b.particles[k] = hallucinate(b.particles[k], n_map, red_prior, rng);
    }
  }
  return b;
}

}  // namespace objcomp

#include "objcomp/grasp.hpp"

#include "objcomp/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace objcomp {

namespace {

Vec2 planar(const Vec3& p) { return {p.x(), p.y()}; }

std::uint64_t quantize(double x) { return static_cast<std::uint64_t>(std::llround(x * 1e5)); }

}  // namespace

std::uint64_t GraspAction::key() const {
  return mix_keys({hash_segment_set(optimized_for), quantize(contact_a.x()), quantize(contact_a.y()),
                   quantize(contact_a.z()), quantize(contact_b.x()), quantize(contact_b.y()),
                   quantize(contact_b.z())});
}

std::vector<GraspRecord> unique_records(std::span<const GraspRecord> history) {
  std::vector<GraspRecord> out;
  for (const auto& r : history) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const GraspRecord& o) {
      return o.grasp.key() == r.grasp.key() && o.occlusion_signature == r.occlusion_signature &&
             o.outcome == r.outcome;
    });
    if (!dup) out.push_back(r);
  }
  return out;
}

GraspAction synthesize_grasp(const std::vector<Vec3>& cloud, const GraspParams& params) {
  if (cloud.size() < 3) throw Error("no stable grasp: fewer than 3 points");

  // uniform planar density: one averaged point per occupied grid cell
  std::map<std::pair<std::int64_t, std::int64_t>, std::pair<Vec2, int>> cells;
  double z_top = -std::numeric_limits<double>::infinity();
  for (const auto& p : cloud) {
    const auto key = std::make_pair(static_cast<std::int64_t>(std::floor(p.x() / params.grid_cell)),
                                    static_cast<std::int64_t>(std::floor(p.y() / params.grid_cell)));
    auto& [sum, n] = cells.try_emplace(key, Vec2::Zero(), 0).first->second;
    sum += planar(p);
    ++n;
    z_top = std::max(z_top, p.z());
  }
  std::vector<Vec2> thinned;
  thinned.reserve(cells.size());
  for (const auto& [k, v] : cells) thinned.push_back(v.first / v.second);
  if (thinned.size() < 3) throw Error("no stable grasp: planar extent too small");

  Vec2 c2 = Vec2::Zero();
  for (const auto& p : thinned) c2 += p;
  c2 /= static_cast<double>(thinned.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : thinned) cov += (p - c2) * (p - c2).transpose();
  cov /= static_cast<double>(thinned.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
  if (hi <= 0.0 || lo <= 1e-9 * hi || lo < 1e-12) throw Error("no stable grasp: collinear cloud");

  Vec2 axis;
  if (hi - lo <= params.eigen_tie * hi) {
    // any direction is principal; take the lexicographically smaller coordinate axis
    axis = Vec2(0.0, 1.0);
  } else {
    axis = eig.eigenvectors().col(0).normalized();
    if (axis.x() < -1e-12 || (std::abs(axis.x()) <= 1e-12 && axis.y() < 0.0)) axis = -axis;
  }

  // grasp centroid: thinned centroid lowered from the wrist plane by the centroid offset
  const Vec3 c1 = centroid_of(cloud);
  const Vec3 c2_lifted(c2.x(), c2.y(), z_top);
  const double drop = (c1 - c2_lifted).norm();

  double radius = 0.0;
  for (const auto& p : thinned) radius = std::max(radius, (p - c2).norm());
  const Vec2 cast_a = c2 - axis * (params.cast_factor * radius);
  const Vec2 cast_b = c2 + axis * (params.cast_factor * radius);

  auto closest = [&](const Vec2& q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double d = (planar(cloud[i]) - q).squaredNorm();
      // ties (vertical columns) resolve to the highest point, then the lowest index
      if (d < best_d - 1e-18 || (std::abs(d - best_d) <= 1e-18 && cloud[i].z() > cloud[best].z())) {
        best = i;
        best_d = d;
      }
    }
    return best;
  };
  const std::size_t ia = closest(cast_a), ib = closest(cast_b);
  if (ia == ib) throw Error("no stable grasp: contacts coincide");

  GraspAction g;
  g.contact_a = cloud[ia];
  g.contact_b = cloud[ib];
  g.centroid = Vec3(c2.x(), c2.y(), z_top - drop);
  g.hand_rotation = std::atan2(axis.y(), axis.x());
  g.finger_distance = (g.contact_a - g.contact_b).norm();
  return g;
}

bool blocked(const GraspAction& grasp, const std::vector<Vec3>& other_points, double clearance) {
  const double r2 = clearance * clearance;
  for (const auto& p : other_points) {
    for (const Vec3* c : {&grasp.contact_a, &grasp.contact_b}) {
      if (p.z() > c->z() + 1e-9 && (planar(p) - planar(*c)).squaredNorm() < r2) return true;
    }
  }
  return false;
}

Footprint::Footprint(const std::vector<Vec3>& cloud, const Vec2& grasp_centroid, double inside_radius)
    : centroid_(grasp_centroid), inside_radius_(inside_radius) {
  points_.reserve(cloud.size());
  for (const auto& p : cloud) points_.push_back(planar(p));
  if (points_.empty()) return;
  lo_ = hi_ = points_.front();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
    radius_ = std::max(radius_, (p - centroid_).norm());
    cells_.emplace_back(cell_key(static_cast<std::int64_t>(std::floor(p.x() / inside_radius_)),
                                 static_cast<std::int64_t>(std::floor(p.y() / inside_radius_))),
                        static_cast<int>(i));
  }
  std::sort(cells_.begin(), cells_.end());
}

bool Footprint::inside(const Vec2& p) const {
  if (points_.empty()) return false;
  if ((p.array() < lo_.array() - inside_radius_).any() || (p.array() > hi_.array() + inside_radius_).any()) return false;
  const auto cx = static_cast<std::int64_t>(std::floor(p.x() / inside_radius_));
  const auto cy = static_cast<std::int64_t>(std::floor(p.y() / inside_radius_));
  const double r2 = inside_radius_ * inside_radius_;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      const auto key = cell_key(cx + dx, cy + dy);
      auto it = std::lower_bound(cells_.begin(), cells_.end(), std::make_pair(key, -1));
      for (; it != cells_.end() && it->first == key; ++it)
        if ((points_[static_cast<std::size_t>(it->second)] - p).squaredNorm() <= r2) return true;
    }
  }
  return false;
}

Vec2 Footprint::nearest(const Vec2& p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = (points_[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return points_[best];
}

HypothesisGeometry make_hypothesis_geometry(const Scene& scene, const SegmentSet& segments, const GraspParams& params) {
  HypothesisGeometry h;
  h.segments = segments;
  double red = 0.0, vis = 0.0;
  for (auto id : segments) {
    const auto& s = scene.segment(id);
    h.cloud.insert(h.cloud.end(), s.points.begin(), s.points.end());
    red += s.red_fraction * static_cast<double>(s.points.size());
    vis += s.visible_fraction * static_cast<double>(s.points.size());
  }
  const double n = static_cast<double>(h.cloud.size());
  if (n > 0) {
    h.red_fraction = red / n;
    h.visible_fraction = vis / n;
  }
  Vec2 grasp_centroid = Vec2::Zero();
  try {
    GraspAction g = synthesize_grasp(h.cloud, params);
    g.optimized_for = segments;
    grasp_centroid = planar(g.centroid);
    h.grasp = std::move(g);
  } catch (const Error&) {
    grasp_centroid = planar(centroid_of(h.cloud));
  }
  h.footprint = Footprint(h.cloud, grasp_centroid, params.inside_radius);
  return h;
}

double grasp_quality(const GraspAction& grasp, const SegmentSet& target, const Footprint& shape,
                     const GraspParams& params) {
  if (grasp.optimized_for == target) return 1.0;
  if (shape.empty()) return 0.0;

  const Vec2 a = planar(grasp.contact_a), b = planar(grasp.contact_b);
  // quick reject on bounding boxes
  const double r = shape.inside_radius();
  if (std::max(a.x(), b.x()) < shape.bbox_min().x() - r || std::min(a.x(), b.x()) > shape.bbox_max().x() + r ||
      std::max(a.y(), b.y()) < shape.bbox_min().y() - r || std::min(a.y(), b.y()) > shape.bbox_max().y() + r)
    return 0.0;

  // steps 1-2: entry and exit of the grasp line inside the target
  const double len = (b - a).norm();
  const auto n = static_cast<std::size_t>(std::ceil(len / (0.25 * params.inside_radius))) + 1;
  std::optional<Vec2> first, last;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
    const Vec2 p = a + t * (b - a);
    if (shape.inside(p)) {
      if (!first) first = p;
      last = p;
    }
  }
  if (!first) return 0.0;

  // steps 3-5: effective centroid against the target's own grasp centroid, both in the wrist plane
  const Vec2 c_y = 0.5 * (*first + *last);
  const Vec2& c_x = shape.grasp_centroid();
  const double offset = (c_y - c_x).norm();
  if (offset < 1e-12) return 1.0;

  // step 6: boundary point of the target beyond c_y on the ray from c_x
  const Vec2 dir = (c_y - c_x) / offset;
  const Vec2 far = c_x + dir * (offset + 2.0 * shape.radius() + params.inside_radius);
  const Vec2 x1 = shape.nearest(far);

  // step 7
  const double denom = (c_x - x1).norm();
  if (denom < 1e-12) return 1.0;
  return std::clamp((c_y - x1).norm() / denom, 0.0, 1.0);
}

double grasp_success_probability(const GraspAction& grasp, const SegmentSet& target, const Footprint& shape,
                                 double visible_fraction, std::span<const GraspRecord> history,
                                 std::uint64_t occlusion_signature, const std::vector<Vec3>& blocking_points,
                                 const GraspParams& params, const OcclusionModel& occ) {
  const auto key = grasp.key();
  for (const auto& r : history)
    if (r.outcome == GraspOutcome::failure && r.grasp.key() == key && r.occlusion_signature == occlusion_signature)
      return 0.0;
  if (blocked(grasp, blocking_points, params.finger_clearance)) return 0.0;
  return grasp_quality(grasp, target, shape, params) * occ(visible_fraction);
}

double action_set_value(const std::vector<std::vector<double>>& success, std::span<const double> prob,
                        std::span<const std::size_t> chosen) {
  double value = 0.0;
  for (std::size_t h = 0; h < prob.size(); ++h) {
    double best = 0.0;
    for (auto a : chosen) best = std::max(best, success[a][h]);
    value += best * prob[h];
  }
  return value;
}

ActionSelection greedy_action_selection(const std::vector<std::vector<double>>& success, std::span<const double> prob,
                                        int budget) {
  ActionSelection out;
  std::vector<double> covered(prob.size(), 0.0);
  std::vector<bool> used(success.size(), false);
  for (int round = 0; round < budget; ++round) {
    double best_gain = 0.0;
    std::size_t best = success.size();
    for (std::size_t a = 0; a < success.size(); ++a) {
      if (used[a]) continue;
      double gain = 0.0;
      for (std::size_t h = 0; h < prob.size(); ++h) gain += std::max(0.0, success[a][h] - covered[h]) * prob[h];
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best = a;
      }
    }
    if (best == success.size()) break;
    used[best] = true;
    out.chosen.push_back(best);
    for (std::size_t h = 0; h < prob.size(); ++h) covered[h] = std::max(covered[h], success[best][h]);
  }
  out.expected_value = action_set_value(success, prob, out.chosen);
  return out;
}

}  // namespace objcomp

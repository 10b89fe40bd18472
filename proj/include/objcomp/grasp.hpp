#pragma once

#include "objcomp/scene.hpp"
#include "objcomp/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace objcomp {

struct GraspParams {
  /// Planar grid used to make the projected point density uniform.
  double grid_cell = 0.005;
  /// A planar point is inside a footprint when a projected point lies within this radius.
  double inside_radius = 0.008;
  /// Radius of the vertical clearance cylinder above each contact.
  double finger_clearance = 0.015;
  /// Cast distance for contact search, in bounding radii.
  double cast_factor = 2.0;
  /// Relative eigenvalue gap below which the principal axes count as tied.
  double eigen_tie = 1e-9;
};

/// Success probability of a perfect grasp as a function of the visible fraction.
struct OcclusionModel {
  double p_min = 0.30;
  double p_max = 0.95;
  double operator()(double visible_fraction) const { return p_min + (p_max - p_min) * visible_fraction; }
};

/// Top-down parallel-jaw grasp with a destination.
struct GraspAction {
  Vec3 contact_a = Vec3::Zero();
  Vec3 contact_b = Vec3::Zero();
  Vec3 centroid = Vec3::Zero();
  /// Rotation of the grasp axis about the vertical, in (-pi/2, pi/2].
  double hand_rotation = 0.0;
  double finger_distance = 0.0;
  SegmentSet optimized_for;
  Location destination = Location::removed;

  /// Identity of the physical grasp (destination excluded).
  std::uint64_t key() const;
  GraspAction with_destination(Location d) const {
    GraspAction g = *this;
    g.destination = d;
    return g;
  }
};

enum class GraspOutcome { success, failure };

struct GraspRecord {
  GraspAction grasp;
  GraspOutcome outcome = GraspOutcome::failure;
  SegmentSet optimized_for;
  std::uint64_t occlusion_signature = 0;
  /// Segments observed to leave the table (success only).
  SegmentSet removed_segments;
};

/// Drops records repeating an earlier (grasp, occlusion signature, outcome).
std::vector<GraspRecord> unique_records(std::span<const GraspRecord> history);

/// Throws Error("no stable grasp") for clouds without a planar extent.
GraspAction synthesize_grasp(const std::vector<Vec3>& cloud, const GraspParams& params = {});

/// True iff a point lies above either contact inside its clearance cylinder.
bool blocked(const GraspAction& grasp, const std::vector<Vec3>& other_points, double clearance = 0.015);

/// Planar projection of a hypothesis onto the wrist plane with its grasp centroid.
class Footprint {
 public:
  Footprint() = default;
  Footprint(const std::vector<Vec3>& cloud, const Vec2& grasp_centroid, double inside_radius);

  bool inside(const Vec2& p) const;
  /// Nearest projected point (lowest index on ties).
  Vec2 nearest(const Vec2& p) const;
  const Vec2& grasp_centroid() const { return centroid_; }
  double radius() const { return radius_; }
  bool empty() const { return points_.empty(); }
  const Vec2& bbox_min() const { return lo_; }
  const Vec2& bbox_max() const { return hi_; }
  double inside_radius() const { return inside_radius_; }

 private:
  std::int64_t cell_key(std::int64_t cx, std::int64_t cy) const { return cx * 0x1000003LL + cy; }

  std::vector<Vec2> points_;
  Vec2 centroid_ = Vec2::Zero();
  Vec2 lo_ = Vec2::Zero();
  Vec2 hi_ = Vec2::Zero();
  double radius_ = 0.0;
  double inside_radius_ = 0.008;
  std::vector<std::pair<std::int64_t, int>> cells_;  // sorted (cell key, point index)
};

/// Geometry of one object hypothesis derived from scene segments.
struct HypothesisGeometry {
  SegmentSet segments;
  std::vector<Vec3> cloud;
  std::optional<GraspAction> grasp;
  Footprint footprint;
  double red_fraction = 0.0;
  double visible_fraction = 1.0;
};

HypothesisGeometry make_hypothesis_geometry(const Scene& scene, const SegmentSet& segments,
                                            const GraspParams& params = {});

/// Quality in [0,1] of `grasp` applied to hypothesis `target` with footprint `shape`.
double grasp_quality(const GraspAction& grasp, const SegmentSet& target, const Footprint& shape,
                     const GraspParams& params = {});

/// quality * occ(visible); zero after a matching failure or when blocked.
double grasp_success_probability(const GraspAction& grasp, const SegmentSet& target, const Footprint& shape,
                                 double visible_fraction, std::span<const GraspRecord> history,
                                 std::uint64_t occlusion_signature, const std::vector<Vec3>& blocking_points,
                                 const GraspParams& params = {}, const OcclusionModel& occ = {});

// ---------------------------------------------------------------------------
// Budgeted action selection

/// sum_h max_{a in chosen} success[a][h] * prob[h]
double action_set_value(const std::vector<std::vector<double>>& success, std::span<const double> prob,
                        std::span<const std::size_t> chosen);

struct ActionSelection {
  std::vector<std::size_t> chosen;
  double expected_value = 0.0;
};

/// Greedy maximization of action_set_value; stops at the budget or when no candidate adds value.
ActionSelection greedy_action_selection(const std::vector<std::vector<double>>& success, std::span<const double> prob,
                                        int budget);

}  // namespace objcomp

#pragma once

#include "objcomp/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace objcomp {

struct Segment {
  SegmentId id = 0;
  std::vector<Vec3> points;
  Vec3 centroid = Vec3::Zero();
  double red_fraction = 0.0;
  /// Fraction of the underlying surface estimated visible.
  double visible_fraction = 1.0;
};

/// Unordered segment pair stored with a < b.
struct SegmentPair {
  SegmentId a = 0;
  SegmentId b = 0;

  static SegmentPair of(SegmentId x, SegmentId y) { return x < y ? SegmentPair{x, y} : SegmentPair{y, x}; }
  auto operator<=>(const SegmentPair&) const = default;
};

struct TrueObject {
  SegmentSet segment_ids;
  bool is_red = false;
};

struct Scene {
  std::vector<Segment> segments;
  /// Pairs that may be directly connected.
  std::vector<SegmentPair> candidate_edges;
  /// P(c_ij = 1); may also hold pairs that are not candidate edges.
  std::map<SegmentPair, double> pair_prior;
  Vec3 camera_origin = Vec3::Zero();
  Box workspace;
  /// Simulator only.
  std::optional<std::vector<TrueObject>> ground_truth;

  std::optional<double> prior(SegmentId a, SegmentId b) const;
  /// Dense index of a segment id, or -1.
  int index_of(SegmentId id) const;
  const Segment& segment(SegmentId id) const;
  std::vector<SegmentId> segment_ids() const;
};

Vec3 centroid_of(const std::vector<Vec3>& points);

/// Throws Error naming the offending field.
void validate(const Scene& scene);

Scene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const Scene& scene);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

inline constexpr const char* kSceneFormat = "composition-scene/1";

// ---------------------------------------------------------------------------
// Occlusion geometry

struct HiddenVolumeOptions {
  double voxel_edge = 0.01;
};

struct HiddenVolumeReport {
  std::map<SegmentId, double> per_segment_hidden;
  double v_hidden = 0.0;
  double v_visible = 0.0;
  double v_total = 0.0;
  double mean_patch_height = 0.0;
  double floor_area = 0.0;
  /// v_visible was clamped to zero; v_total != v_hidden + v_visible in that case.
  bool visible_clamped = false;
};

/// Volume shadowed by one cubic voxel: the cone from the camera through the voxel silhouette,
/// from the voxel's far side to where the central ray leaves the workspace.
double voxel_shadow_volume(const Vec3& camera, const Vec3& voxel_center, double edge, const Box& workspace);

/// Distance along the ray camera->through at which the ray leaves the box; nullopt if it misses.
std::optional<double> ray_exit_distance(const Vec3& origin, const Vec3& direction, const Box& box);

HiddenVolumeReport hidden_volume(const Scene& scene, const HiddenVolumeOptions& options = {});

/// For every segment, the ids of other segments lying in front of it as seen from the camera
/// (some point of the occluder within `radius` of a viewing ray, and nearer to the camera).
std::map<SegmentId, SegmentSet> segment_occluders(const Scene& scene, double radius = 0.01);

}  // namespace objcomp

#pragma once

#include "objcomp/scene.hpp"
#include "objcomp/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace objcomp {

struct GeneratorConfig {
  int min_objects = 4;
  int max_objects = 6;
  int min_segments = 1;
  int max_segments = 3;
  double red_probability = 0.4;
  /// Probability that a free object is placed touching an earlier one.
  double clutter_density = 0.3;
  /// Distance of noise-free priors from 0.5.
  double prior_bias = 0.25;
  /// Reduced bias for segment pairs inside a two-colored object.
  double ambiguous_bias = 0.04;
  /// Noise-free prior of segment pairs across two touching objects.
  double touching_prior = 0.46;
  /// Standard deviation of the per-view prior noise.
  double prior_noise = 0.08;
  /// Probability of a tall occluder with a small object hidden behind it.
  double hidden_object_probability = 0.0;
  double hidden_red_probability = 0.7;
  /// Probability of a red bar with a non-red bar lying across it.
  double lid_probability = 0.0;
  /// Probability that a non-red object carries a small red part.
  double bicolor_probability = 0.0;
  double point_spacing = 0.01;
  Box workspace{Vec3(-0.25, -0.25, 0.0), Vec3(0.25, 0.25, 0.3)};
  Vec3 camera = Vec3(0.0, -0.7, 0.6);

  void validate() const;
};

nlohmann::json generator_config_to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

/// One rigid part of a true object; becomes one segment when visible.
struct Piece {
  SegmentId id = 0;
  Box box;
  double red_fraction = 0.0;
  /// Surface samples with outward normals (bottom face excluded).
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  /// Visible fraction reported when the world does not ray-cast visibility.
  double base_visible = 1.0;
};

struct WorldObject {
  std::vector<Piece> pieces;
  bool is_red = false;
  Location location = Location::table;
};

/// Ground-truth world from which scene views are rendered.
struct TrueWorld {
  std::vector<WorldObject> objects;
  Vec3 camera = Vec3::Zero();
  Box workspace;
  double prior_bias = 0.25;
  double ambiguous_bias = 0.04;
  double touching_prior = 0.46;
  double prior_noise = 0.08;
  /// Object index pairs (i < j) whose cross priors use the touching prior.
  std::vector<std::pair<int, int>> ambiguous_objects;
  /// Segment pairs inside one object whose priors use the ambiguous bias.
  std::vector<SegmentPair> ambiguous_segments;
  /// Worlds built from scene files keep the file's candidate edges and priors.
  std::optional<std::vector<SegmentPair>> fixed_edges;
  std::map<SegmentPair, double> fixed_priors;
  /// False for worlds built from scene files: every point is visible and fractions are copied.
  bool raycast = true;
  std::uint64_t seed = 0;

  /// Visible points of one piece given the table-located objects.
  std::vector<Vec3> visible_points(const Piece& piece) const;
  /// Scene as seen from the camera; priors are noised with a view-specific seed.
  Scene view(std::uint64_t view_seed) const;
  /// Index of the table-located object holding segment `id`, or -1.
  int object_of_segment(SegmentId id) const;
  /// Every surface point of table-located objects other than `except`.
  std::vector<Vec3> table_points_except(int except) const;
  int table_object_count() const;
  /// Points facing the camera that no other piece of the same object hides.
  std::size_t exposed_count(const Piece& piece) const;
  /// Share of the exposed points of object `idx` that other objects leave visible.
  double visible_fraction(int idx) const;
  /// Noise-free prior of two pieces.
  double prior_center(SegmentId a, SegmentId b) const;
};

TrueWorld generate_world(const GeneratorConfig& config, std::uint64_t seed);

/// World whose objects are the ground-truth objects of a scene file. Each segment becomes one piece
/// (its bounding box) that keeps the file's points and visible fraction.
TrueWorld world_from_scene(const Scene& scene, double prior_noise = 0.0);

inline Scene generate_scene(const GeneratorConfig& config, std::uint64_t seed) {
  return generate_world(config, seed).view(seed);
}

/// Distance between two boxes (0 when touching or overlapping).
double box_distance(const Box& a, const Box& b);

}  // namespace objcomp

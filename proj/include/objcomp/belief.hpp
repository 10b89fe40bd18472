#pragma once

#include "objcomp/composition.hpp"
#include "objcomp/grasp.hpp"
#include "objcomp/rng.hpp"
#include "objcomp/sampler.hpp"
#include "objcomp/scene.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace objcomp {

/// Object hypothesis of one scene: a segment set with derived geometry and attributes.
struct Hypothesis {
  SegmentSet segments;
  SegmentMask mask;
  double red_fraction = 0.0;
  bool is_red = false;
  double visible_fraction = 1.0;
  /// Segments (outside the hypothesis) lying in front of it.
  SegmentMask occluders;
  std::uint64_t occlusion_signature = 0;
  std::optional<GraspAction> grasp;
  Footprint footprint;
  double hidden_volume = 0.0;
};

struct CatalogOptions {
  GraspParams grasp;
  HiddenVolumeOptions voxels;
  double occluder_radius = 0.01;
  double default_cross_prior = 0.5;
};

/// Interned hypotheses of one scene, shared by every particle of a belief.
class HypothesisCatalog {
 public:
  explicit HypothesisCatalog(std::shared_ptr<const Scene> scene, const CatalogOptions& options = {});

  const Scene& scene() const { return *scene_; }
  const CompositionSpace& space() const { return space_; }
  const CatalogOptions& options() const { return options_; }
  const HiddenVolumeReport& hidden() const { return hidden_; }

  /// Index of the hypothesis with this mask, creating it on first use.
  int intern(const SegmentMask& mask);
  int find(const SegmentMask& mask) const;
  int intern_segments(const SegmentSet& segments) { return intern(mask_of(segments)); }

  std::size_t size() const { return entries_.size(); }
  const Hypothesis& operator[](std::size_t i) const { return entries_[i]; }

  /// Mask of the given ids; throws on an id absent from the scene.
  SegmentMask mask_of(const SegmentSet& segments) const;
  /// True iff every id is part of the scene.
  bool contains_all(const SegmentSet& segments) const;
  /// Segments with a point inside a clearance cylinder above either contact.
  SegmentMask block_mask(const GraspAction& grasp) const;
  /// Hash of the occluder set of the union of `segments` (ids absent from the scene are ignored).
  std::uint64_t occlusion_signature(const SegmentSet& segments) const;

  /// Hypothesis indices of one composition sample (cached by assignment).
  const std::vector<int>& hypotheses_of(const EdgeAssignment& assignment);

 private:
  std::shared_ptr<const Scene> scene_;
  CatalogOptions options_;
  CompositionSpace space_;
  HiddenVolumeReport hidden_;
  std::vector<SegmentMask> segment_occluders_;  // per dense index
  std::vector<Hypothesis> entries_;
  std::unordered_map<SegmentMask, int, BitsetHash> index_;
  std::unordered_map<EdgeAssignment, std::vector<int>, BitsetHash> compositions_;
};

/// Sentinel hypothesis index of a hallucinated object.
inline constexpr int kHallucinated = -1;

struct ObjectState {
  int hypothesis = kHallucinated;
  Location location = Location::table;
  bool is_red = false;
  double visible_fraction = 1.0;
  /// Keys of grasps that failed on this object under its current occlusion.
  std::vector<std::uint64_t> failed_grasps;
  /// Occluding object (index within the state) of a hallucinated object.
  int parent = -1;

  bool hallucinated() const { return hypothesis == kHallucinated; }
  bool operator==(const ObjectState&) const = default;
  auto operator<=>(const ObjectState&) const = default;
};

struct WorldState {
  std::vector<ObjectState> objects;
  bool operator==(const WorldState&) const = default;
  auto operator<=>(const WorldState&) const = default;
};

struct Belief {
  std::shared_ptr<HypothesisCatalog> catalog;
  std::vector<WorldState> particles;
  std::vector<double> weights;
  /// Composition sample of each particle.
  std::vector<EdgeAssignment> sources;
};

class BeliefCollapse : public Error {
 public:
  BeliefCollapse() : Error("belief collapse: the grasp history contradicts every composition sample") {}
};

struct BeliefOptions {
  bool hallucination = false;
  std::uint64_t seed = 0;
  OcclusionModel occ;
};

/// Success probability of `grasp` on hypothesis `h` of the catalog, ignoring history:
/// quality * occ(visible), zero when blocked by segments outside `h`.
double hypothesis_success(const HypothesisCatalog& catalog, const GraspAction& grasp, const SegmentMask& block,
                          int h, const OcclusionModel& occ = {});

/// Likelihood of the grasp history given one composition (hypothesis indices into `catalog`).
double composition_weight(const HypothesisCatalog& catalog, std::span<const int> hypotheses,
                          std::span<const GraspRecord> history, const OcclusionModel& occ = {});

/// Expected hidden objects behind each hypothesis: n_objects / V_visible * V_hidden(h).
std::vector<double> expected_hidden_objects(const HypothesisCatalog& catalog, std::span<const int> hypotheses,
                                            double n_objects);

/// 1 - Phi((1 - n) / sqrt(n / 4)); zero for n = 0.
double hidden_object_probability(double n);

/// Adds at most one hidden object behind each table-located object.
WorldState hallucinate(const WorldState& particle, std::span<const double> n_map, double red_prior, Rng& rng);

Belief build_belief(std::shared_ptr<HypothesisCatalog> catalog, const CompositionSet& samples,
                    std::span<const GraspRecord> history, const BeliefOptions& options = {});

/// 0.2 + 0.6 * fraction, the rescaling of a red fraction into [0.2, 0.8].
inline double rescale_red_prior(double fraction) { return 0.2 + 0.6 * fraction; }

}  // namespace objcomp

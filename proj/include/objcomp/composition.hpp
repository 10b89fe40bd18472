#pragma once

#include "objcomp/scene.hpp"
#include "objcomp/types.hpp"

#include <vector>

namespace objcomp {

/// Union-find over dense indices with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n = 0) { reset(n); }

  void reset(std::size_t n) {
    parent_.resize(n);
    size_.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) parent_[i] = static_cast<int>(i);
  }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    return true;
  }
  bool connected(int a, int b) { return find(a) == find(b); }
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

/// Dense view of a scene used by the sampler: segment indices, edge endpoints and log pair factors.
class CompositionSpace {
 public:
  explicit CompositionSpace(const Scene& scene, double default_cross_prior = 0.5);

  std::size_t segment_count() const { return ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  /// Dense endpoints of candidate edge w.
  std::pair<int, int> edge(std::size_t w) const { return edges_[w]; }
  SegmentId segment_id(int dense) const { return ids_[static_cast<std::size_t>(dense)]; }
  const std::vector<SegmentId>& segment_ids() const { return ids_; }
  int dense_index(SegmentId id) const;

  double prior(int i, int j) const { return prior_[index(i, j)]; }
  double log_connected(int i, int j) const { return log_p1_[index(i, j)]; }
  double log_disconnected(int i, int j) const { return log_p0_[index(i, j)]; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * ids_.size() + static_cast<std::size_t>(j);
  }

  std::vector<SegmentId> ids_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<double> prior_;
  std::vector<double> log_p1_;
  std::vector<double> log_p0_;
};

struct Composition {
  /// Disjoint hypotheses sorted by their smallest segment id.
  std::vector<SegmentSet> hypotheses;
  EdgeAssignment source;
};

/// Component label per dense segment index; labels are numbered by first appearance, so equal
/// partitions yield equal label vectors.
std::vector<int> component_labels(const EdgeAssignment& assignment, const CompositionSpace& space);

Composition components(const EdgeAssignment& assignment, const CompositionSpace& space);

struct LinkProbability {
  double log_connected = 0.0;     ///< log prod_{U x V} P(c_uv = 1)
  double log_disconnected = 0.0;  ///< log prod_{U x V} P(c_uv = 0)
  double p_connect = 0.0;
  bool indirectly_connected = false;
  std::size_t u_size = 0;
  std::size_t v_size = 0;
};

/// Conditional probability of enabling edge w given the rest of `assignment` (edge w is treated
/// as disabled regardless of its stored value).
LinkProbability link_probability(const EdgeAssignment& assignment, std::size_t w, const CompositionSpace& space);

/// One Gibbs update of edge w driven by the uniform q: enabled iff p_connect > q.
EdgeAssignment gibbs_step(const EdgeAssignment& assignment, std::size_t w, double q, const CompositionSpace& space);

/// Reusable scratch for in-place updates in hot loops.
class GibbsKernel {
 public:
  explicit GibbsKernel(const CompositionSpace& space) : space_(&space), dsu_(space.segment_count()) {}

  double p_connect(const EdgeAssignment& assignment, std::size_t w);
  void step(EdgeAssignment& assignment, std::size_t w, double q) { assignment.set(w, p_connect(assignment, w) > q); }
  LinkProbability link(const EdgeAssignment& assignment, std::size_t w);

 private:
  const CompositionSpace* space_;
  DisjointSet dsu_;
  std::vector<int> u_;
  std::vector<int> v_;
};

}  // namespace objcomp

#pragma once

#include "objcomp/composition.hpp"
#include "objcomp/scene.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace objcomp::testing {

/// Small hand-made scenes built from flat square point patches.
class SceneBuilder {
 public:
  SceneBuilder() {
    scene_.camera_origin = Vec3(0.0, -0.7, 0.6);
    scene_.workspace = Box{Vec3(-0.25, -0.25, 0.0), Vec3(0.25, 0.25, 0.3)};
  }

  /// n x n points with the given spacing, centred at `center`.
  SceneBuilder& patch(SegmentId id, const Vec3& center, double red = 0.0, double visible = 1.0, int n = 3,
                      double spacing = 0.01) {
    Segment s;
    s.id = id;
    const double off = 0.5 * spacing * (n - 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s.points.emplace_back(center.x() - off + spacing * i, center.y() - off + spacing * j, center.z());
    return segment(std::move(s), red, visible);
  }

  SceneBuilder& points(SegmentId id, std::vector<Vec3> pts, double red = 0.0, double visible = 1.0) {
    Segment s;
    s.id = id;
    s.points = std::move(pts);
    return segment(std::move(s), red, visible);
  }

  SceneBuilder& edge(SegmentId a, SegmentId b, double prior) {
    const auto e = SegmentPair::of(a, b);
    scene_.candidate_edges.push_back(e);
    scene_.pair_prior[e] = prior;
    return *this;
  }

  /// Prior for a pair that is not a candidate edge.
  SceneBuilder& prior(SegmentId a, SegmentId b, double p) {
    scene_.pair_prior[SegmentPair::of(a, b)] = p;
    return *this;
  }

  SceneBuilder& truth(std::vector<TrueObject> objects) {
    scene_.ground_truth = std::move(objects);
    return *this;
  }

  Scene build() const {
    validate(scene_);
    return scene_;
  }

 private:
  SceneBuilder& segment(Segment s, double red, double visible) {
    s.centroid = centroid_of(s.points);
    s.red_fraction = red;
    s.visible_fraction = visible;
    scene_.segments.push_back(std::move(s));
    return *this;
  }

  Scene scene_;
};

/// Segments in a row along x, 5 cm apart, with the given candidate edges and priors.
inline Scene row_scene(int segments, const std::vector<std::pair<std::pair<int, int>, double>>& edges) {
  SceneBuilder b;
  for (int i = 0; i < segments; ++i) b.patch(i, Vec3(-0.1 + 0.05 * i, 0.0, 0.01));
  for (const auto& [e, p] : edges) b.edge(e.first, e.second, p);
  return b.build();
}

// ---------------------------------------------------------------------------
// Enumeration oracle for the single-edge Gibbs kernel, written without the library's
// union-find or link computation.

/// Component label of each segment index when the enabled edges (bits of `state`) are joined.
inline std::vector<int> oracle_labels(std::uint32_t state, std::size_t n,
                                      const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < edges.size(); ++w) {
        if (!((state >> w) & 1u)) continue;
        const auto a = static_cast<std::size_t>(edges[w].first), b = static_cast<std::size_t>(edges[w].second);
        const std::size_t other = a == u ? b : (b == u ? a : n);
        if (other < n && label[other] < 0) {
          label[other] = next;
          stack.push_back(other);
        }
      }
    }
    ++next;
  }
  return label;
}

/// P(enable edge w | other edges of `state`): the pair prior when the endpoints are already joined,
/// otherwise prod P(c=1) / (prod P(c=1) + prod P(c=0)) over the two components.
inline double oracle_p_connect(std::uint32_t state, std::size_t w, std::size_t n,
                               const std::vector<std::pair<int, int>>& edges,
                               const std::function<double(int, int)>& prior) {
  const auto lab = oracle_labels(state & ~(1u << w), n, edges);
  const int i = edges[w].first, j = edges[w].second;
  if (lab[static_cast<std::size_t>(i)] == lab[static_cast<std::size_t>(j)]) return prior(i, j);
  double on = 1.0, off = 1.0;
  for (std::size_t u = 0; u < n; ++u) {
    if (lab[u] != lab[static_cast<std::size_t>(i)]) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (lab[v] != lab[static_cast<std::size_t>(j)]) continue;
      const double p = prior(static_cast<int>(u), static_cast<int>(v));
      on *= p;
      off *= 1.0 - p;
    }
  }
  return on / (on + off);
}

/// Stationary distribution over the 2^E edge states of the kernel "pick a uniform edge, resample it".
inline std::vector<double> oracle_stationary(std::size_t n, const std::vector<std::pair<int, int>>& edges,
                                             const std::function<double(int, int)>& prior) {
  const std::size_t m = edges.size();
  const std::size_t states = std::size_t{1} << m;
  std::vector<std::vector<double>> T(states, std::vector<double>(states, 0.0));
  for (std::uint32_t s = 0; s < states; ++s) {
    for (std::size_t w = 0; w < m; ++w) {
      const double p = oracle_p_connect(s, w, n, edges, prior);
      T[s][s | (1u << w)] += p / static_cast<double>(m);
      T[s][s & ~(1u << w)] += (1.0 - p) / static_cast<double>(m);
    }
  }
  std::vector<double> pi(states, 1.0 / static_cast<double>(states));
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> nx(states, 0.0);
    for (std::size_t s = 0; s < states; ++s)
      for (std::size_t t = 0; t < states; ++t) nx[t] += pi[s] * T[s][t];
    double diff = 0.0;
    for (std::size_t s = 0; s < states; ++s) diff += std::abs(nx[s] - pi[s]);
    pi = std::move(nx);
    if (diff < 1e-15) break;
  }
  return pi;
}

/// Oracle distribution over partitions (keyed by label vector) induced by the edge-state distribution.
inline std::map<std::vector<int>, double> oracle_partitions(std::size_t n, const std::vector<std::pair<int, int>>& edges,
                                                            const std::vector<double>& state_prob) {
  std::map<std::vector<int>, double> out;
  for (std::uint32_t s = 0; s < state_prob.size(); ++s) out[oracle_labels(s, n, edges)] += state_prob[s];
  return out;
}

/// Edge-state index of an assignment.
inline std::uint32_t state_index(const EdgeAssignment& a) {
  std::uint32_t s = 0;
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w]) s |= 1u << w;
  return s;
}

template <class Map>
double total_variation(const Map& p, const Map& q) {
  double tv = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    tv += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q)
    if (!p.count(k)) tv += std::abs(v);
  return 0.5 * tv;
}

}  // namespace objcomp::testing

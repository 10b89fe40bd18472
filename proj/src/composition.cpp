#include "objcomp/composition.hpp"

#include <algorithm>
#include <cmath>

namespace objcomp {

CompositionSpace::CompositionSpace(const Scene& scene, double default_cross_prior) {
  if (!(default_cross_prior > 0.0 && default_cross_prior < 1.0))
    throw Error("default cross prior must lie strictly in (0,1)");
  ids_ = scene.segment_ids();
  const std::size_t n = ids_.size();
  prior_.assign(n * n, default_cross_prior);
  for (const auto& [pair, p] : scene.pair_prior) {
    const int i = dense_index(pair.a), j = dense_index(pair.b);
    if (i < 0 || j < 0) throw Error("pair_prior references an unknown segment");
    prior_[index(i, j)] = p;
    prior_[index(j, i)] = p;
  }
  log_p1_.resize(n * n);
  log_p0_.resize(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    log_p1_[k] = std::log(prior_[k]);
    log_p0_[k] = std::log1p(-prior_[k]);
  }
  edges_.reserve(scene.candidate_edges.size());
  for (const auto& e : scene.candidate_edges) {
    const int i = dense_index(e.a), j = dense_index(e.b);
    if (i < 0 || j < 0) throw Error("candidate edge references an unknown segment");
    edges_.emplace_back(i, j);
  }
}

int CompositionSpace::dense_index(SegmentId id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  return it == ids_.end() ? -1 : static_cast<int>(it - ids_.begin());
}

std::vector<int> component_labels(const EdgeAssignment& assignment, const CompositionSpace& space) {
  if (assignment.size() != space.edge_count()) throw Error("edge assignment length does not match the scene");
  const std::size_t n = space.segment_count();
  DisjointSet dsu(n);
  for (std::size_t w = 0; w < space.edge_count(); ++w)
    if (assignment[w]) dsu.unite(space.edge(w).first, space.edge(w).second);
  std::vector<int> root_label(n, -1);
  std::vector<int> labels(n);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int r = dsu.find(static_cast<int>(i));
    auto& l = root_label[static_cast<std::size_t>(r)];
    if (l < 0) l = next++;
    labels[i] = l;
  }
  return labels;
}

Composition components(const EdgeAssignment& assignment, const CompositionSpace& space) {
  const auto labels = component_labels(assignment, space);
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  Composition c;
  c.source = assignment;
  c.hypotheses.resize(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    c.hypotheses[static_cast<std::size_t>(labels[i])].push_back(space.segment_id(static_cast<int>(i)));
  for (auto& h : c.hypotheses) std::sort(h.begin(), h.end());
  std::sort(c.hypotheses.begin(), c.hypotheses.end());
  return c;
}

LinkProbability GibbsKernel::link(const EdgeAssignment& assignment, std::size_t w) {
  const auto& space = *space_;
  const std::size_t n = space.segment_count();
  dsu_.reset(n);
  for (std::size_t e = 0; e < space.edge_count(); ++e)
    if (e != w && assignment[e]) dsu_.unite(space.edge(e).first, space.edge(e).second);

  const auto [i, j] = space.edge(w);
  LinkProbability out;
  const int ri = dsu_.find(i), rj = dsu_.find(j);
  if (ri == rj) {
    // connecting i and j changes no hypothesis; only their own pair prior matters
    out.indirectly_connected = true;
    out.log_connected = space.log_connected(i, j);
    out.log_disconnected = space.log_disconnected(i, j);
    out.u_size = out.v_size = 1;
  } else {
    u_.clear();
    v_.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const int r = dsu_.find(static_cast<int>(k));
      if (r == ri)
        u_.push_back(static_cast<int>(k));
      else if (r == rj)
        v_.push_back(static_cast<int>(k));
    }
    for (int u : u_) {
      for (int v : v_) {
        out.log_connected += space.log_connected(u, v);
        out.log_disconnected += space.log_disconnected(u, v);
      }
    }
    out.u_size = u_.size();
    out.v_size = v_.size();
  }
  // p1 / (p1 + p0) evaluated without leaving log space
  const double d = out.log_disconnected - out.log_connected;
  out.p_connect = d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
  return out;
}

double GibbsKernel::p_connect(const EdgeAssignment& assignment, std::size_t w) { return link(assignment, w).p_connect; }

LinkProbability link_probability(const EdgeAssignment& assignment, std::size_t w, const CompositionSpace& space) {
  if (w >= space.edge_count()) throw Error("edge index out of range");
  if (assignment.size() != space.edge_count()) throw Error("edge assignment length does not match the scene");
  GibbsKernel kernel(space);
  return kernel.link(assignment, w);
}

EdgeAssignment gibbs_step(const EdgeAssignment& assignment, std::size_t w, double q, const CompositionSpace& space) {
  const auto link = link_probability(assignment, w, space);
  EdgeAssignment next = assignment;
  next.set(w, link.p_connect > q);
  return next;
}

}  // namespace objcomp

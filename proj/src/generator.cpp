#include "objcomp/generator.hpp"

#include "objcomp/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace objcomp {

namespace {

constexpr std::uint64_t kGenStream = 0x6E4Eu;
constexpr std::uint64_t kNoiseStream = 0x9015u;

struct Footprint2 {
  double x0, y0, x1, y1;
  bool overlaps(const Footprint2& o, double gap) const {
    return x0 < o.x1 + gap && o.x0 < x1 + gap && y0 < o.y1 + gap && o.y0 < y1 + gap;
  }
};

void sample_face(std::vector<Vec3>& pts, std::vector<Vec3>& normals, const Vec3& origin, const Vec3& u, const Vec3& v,
                 const Vec3& normal, double spacing) {
  const double lu = u.norm(), lv = v.norm();
  const int nu = std::max(2, static_cast<int>(std::ceil(lu / spacing - 1e-9)) + 1);
  const int nv = std::max(2, static_cast<int>(std::ceil(lv / spacing - 1e-9)) + 1);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      pts.push_back(origin + u * (static_cast<double>(i) / (nu - 1)) + v * (static_cast<double>(j) / (nv - 1)));
      normals.push_back(normal);
    }
  }
}

Piece make_piece(SegmentId id, const Box& box, double red_fraction, double spacing) {
  Piece p;
  p.id = id;
  p.box = box;
  p.red_fraction = red_fraction;
  const Vec3 lo = box.min, e = box.extent();
  const Vec3 ex(e.x(), 0, 0), ey(0, e.y(), 0), ez(0, 0, e.z());
  sample_face(p.points, p.normals, Vec3(lo.x(), lo.y(), box.max.z()), ex, ey, Vec3::UnitZ(), spacing);
  sample_face(p.points, p.normals, lo, ey, ez, -Vec3::UnitX(), spacing);
  sample_face(p.points, p.normals, Vec3(box.max.x(), lo.y(), lo.z()), ey, ez, Vec3::UnitX(), spacing);
  sample_face(p.points, p.normals, lo, ex, ez, -Vec3::UnitY(), spacing);
  sample_face(p.points, p.normals, Vec3(lo.x(), box.max.y(), lo.z()), ex, ez, Vec3::UnitY(), spacing);
  return p;
}

/// True iff the open segment from `a` to `b` passes through the interior of `box`.
bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box) {
  constexpr double shrink = 1e-7;
  double t0 = 0.0, t1 = 1.0 - 1e-9;
  const Vec3 d = b - a;
  for (int k = 0; k < 3; ++k) {
    const double lo = box.min[k] + shrink, hi = box.max[k] - shrink;
    if (std::abs(d[k]) < 1e-15) {
      if (a[k] <= lo || a[k] >= hi) return false;
      continue;
    }
    double ta = (lo - a[k]) / d[k], tb = (hi - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

double noise_normal(std::uint64_t seed, std::uint64_t view, SegmentId a, SegmentId b) {
  const auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
  double u1 = counter_uniform({seed, kNoiseStream, view, ua, ub, 0});
  const double u2 = counter_uniform({seed, kNoiseStream, view, ua, ub, 1});
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

class Builder {
 public:
  Builder(const GeneratorConfig& c, std::uint64_t seed) : c_(c), rng_(Rng::derived({seed, kGenStream})) {
    world_.camera = c.camera;
    world_.workspace = c.workspace;
    world_.prior_bias = c.prior_bias;
    world_.ambiguous_bias = c.ambiguous_bias;
    world_.touching_prior = c.touching_prior;
    world_.prior_noise = c.prior_noise;
    world_.seed = seed;
  }

  TrueWorld build() {
    if (rng_.bernoulli(c_.lid_probability)) lid_motif();
    if (rng_.bernoulli(c_.hidden_object_probability)) hidden_motif();
    const int n = rng_.uniform_int(c_.min_objects, c_.max_objects);
    std::vector<int> free_objects;
    for (int k = 0; k < n; ++k) {
      const int placed = free_object(free_objects);
      if (placed >= 0) free_objects.push_back(placed);
    }
    if (world_.objects.empty()) throw Error("generator: no object could be placed");
    return std::move(world_);
  }

 private:
  /// Splits a footprint into `k` pieces along x or y and appends the object; returns its index.
  int add_object(const Footprint2& f, double z0, double height, int k, bool along_x, double red_fraction,
                 bool is_red) {
    WorldObject obj;
    obj.is_red = is_red;
    for (int i = 0; i < k; ++i) {
      Box b;
      if (along_x) {
        const double w = (f.x1 - f.x0) / k;
        b.min = Vec3(f.x0 + w * i, f.y0, z0);
        b.max = Vec3(f.x0 + w * (i + 1), f.y1, z0 + height);
      } else {
        const double w = (f.y1 - f.y0) / k;
        b.min = Vec3(f.x0, f.y0 + w * i, z0);
        b.max = Vec3(f.x1, f.y0 + w * (i + 1), z0 + height);
      }
      obj.pieces.push_back(make_piece(next_id_++, b, red_fraction, c_.point_spacing));
    }
    world_.objects.push_back(std::move(obj));
    return static_cast<int>(world_.objects.size()) - 1;
  }

  bool fits(const Footprint2& f, double gap) const {
    const auto& w = c_.workspace;
    constexpr double margin = 0.02;
    if (f.x0 < w.min.x() + margin || f.x1 > w.max.x() - margin || f.y0 < w.min.y() + margin ||
        f.y1 > w.max.y() - margin)
      return false;
    for (const auto& o : taken_)
      if (f.overlaps(o, gap)) return false;
    return true;
  }

  std::optional<Footprint2> place(double sx, double sy, double gap) {
    const auto& w = c_.workspace;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double x = rng_.uniform(w.min.x(), w.max.x() - sx);
      const double y = rng_.uniform(w.min.y(), w.max.y() - sy);
      Footprint2 f{x, y, x + sx, y + sy};
      if (fits(f, gap)) return f;
    }
    return std::nullopt;
  }

  double red_value(bool red) { return red ? rng_.uniform(0.9, 1.0) : rng_.uniform(0.0, 0.1); }

  void lid_motif() {
    const double len = rng_.uniform(0.10, 0.12), width = 0.03, height = 0.03;
    const double lid_len = 0.08, lid_w = 0.03, lid_h = 0.02;
    auto f = place(len, lid_len, kGap);
    if (!f) return;
    taken_.push_back(*f);
    const double yc = 0.5 * (f->y0 + f->y1), xc = 0.5 * (f->x0 + f->x1);
    const Footprint2 bar{f->x0, yc - width / 2, f->x1, yc + width / 2};
    const int red = add_object(bar, 0.0, height, 3, true, red_value(true), true);
    const Footprint2 lid{xc - lid_w / 2, f->y0, xc + lid_w / 2, f->y1};
    const int top = add_object(lid, height, lid_h, rng_.uniform_int(1, 2), false, red_value(false), false);
    (void)red;
    (void)top;
  }

  void hidden_motif() {
    const double wall_len = rng_.uniform(0.07, 0.09), wall_depth = 0.03, wall_h = 0.15;
    const double hid = 0.03, hid_h = 0.025, gap = 0.01;
    auto f = place(wall_len, wall_depth + gap + hid, kGap);
    if (!f) return;
    taken_.push_back(*f);
    const Footprint2 wall{f->x0, f->y0, f->x1, f->y0 + wall_depth};
    add_object(wall, 0.0, wall_h, rng_.uniform_int(1, 2), true, red_value(false), false);
    const double xc = 0.5 * (f->x0 + f->x1);
    const Footprint2 small{xc - hid / 2, f->y0 + wall_depth + gap, xc + hid / 2, f->y0 + wall_depth + gap + hid};
    const bool red = rng_.bernoulli(c_.hidden_red_probability);
    add_object(small, 0.0, hid_h, 1, true, red_value(red), red);
  }

  int free_object(const std::vector<int>& free_objects) {
    const int k = rng_.uniform_int(c_.min_segments, c_.max_segments);
    const bool along_x = rng_.bernoulli(0.5);
    const double piece_len = rng_.uniform(0.03, 0.045);
    const double width = rng_.uniform(0.03, 0.05);
    const double height = rng_.uniform(0.02, 0.06);
    const bool red = rng_.bernoulli(c_.red_probability);
    const bool bicolor = !red && rng_.bernoulli(c_.bicolor_probability);
    const double tip = bicolor ? 0.02 : 0.0;
    const double sx = along_x ? piece_len * k + tip : width;
    const double sy = along_x ? width : piece_len * k + tip;

    std::optional<Footprint2> f;
    int neighbour = -1;
    if (!free_objects.empty() && rng_.bernoulli(c_.clutter_density)) {
      neighbour = free_objects[rng_.index(free_objects.size())];
      f = touching(neighbour, sx, sy);
      if (!f) neighbour = -1;
    }
    if (!f) f = place(sx, sy, kGap);
    if (!f) return -1;
    taken_.push_back(*f);

    Footprint2 body = *f;
    if (along_x)
      body.x1 -= tip;
    else
      body.y1 -= tip;
    const int idx = add_object(body, 0.0, height, k, along_x, red_value(red), red);
    if (bicolor) {
      Box b;
      b.min = along_x ? Vec3(body.x1, body.y0, 0.0) : Vec3(body.x0, body.y1, 0.0);
      b.max = Vec3(f->x1, f->y1, height);
      auto& obj = world_.objects[static_cast<std::size_t>(idx)];
      const SegmentId tip_id = next_id_++;
      for (const auto& p : obj.pieces) world_.ambiguous_segments.push_back(SegmentPair::of(p.id, tip_id));
      obj.pieces.push_back(make_piece(tip_id, b, red_value(true), c_.point_spacing));
    }
    if (neighbour >= 0) world_.ambiguous_objects.emplace_back(std::min(neighbour, idx), std::max(neighbour, idx));
    return idx;
  }

  /// Footprint flush against a side of object `other`, not overlapping anything else.
  std::optional<Footprint2> touching(int other, double sx, double sy) {
    Box ob = world_.objects[static_cast<std::size_t>(other)].pieces.front().box;
    for (const auto& p : world_.objects[static_cast<std::size_t>(other)].pieces) {
      ob.min = ob.min.cwiseMin(p.box.min);
      ob.max = ob.max.cwiseMax(p.box.max);
    }
    for (int attempt = 0; attempt < 40; ++attempt) {
      const int side = rng_.uniform_int(0, 3);
      Footprint2 f{};
      if (side < 2) {
        const double y = rng_.uniform(ob.min.y() - sy + 0.01, ob.max.y() - 0.01);
        const double x = side == 0 ? ob.max.x() : ob.min.x() - sx;
        f = {x, y, x + sx, y + sy};
      } else {
        const double x = rng_.uniform(ob.min.x() - sx + 0.01, ob.max.x() - 0.01);
        const double y = side == 2 ? ob.max.y() : ob.min.y() - sy;
        f = {x, y, x + sx, y + sy};
      }
      // the neighbour's own footprint is allowed to touch; shrink by a hair for the overlap test
      Footprint2 probe{f.x0 + 1e-6, f.y0 + 1e-6, f.x1 - 1e-6, f.y1 - 1e-6};
      bool ok = true;
      const auto& w = c_.workspace;
      if (f.x0 < w.min.x() + 0.02 || f.x1 > w.max.x() - 0.02 || f.y0 < w.min.y() + 0.02 || f.y1 > w.max.y() - 0.02)
        ok = false;
      for (std::size_t t = 0; ok && t < taken_.size(); ++t) {
        const bool is_other = std::abs(taken_[t].x0 - ob.min.x()) < 1e-9 && std::abs(taken_[t].y0 - ob.min.y()) < 1e-9;
        if (probe.overlaps(taken_[t], is_other ? 0.0 : kGap)) ok = false;
      }
      if (ok) return f;
    }
    return std::nullopt;
  }

  static constexpr double kGap = 0.03;

  const GeneratorConfig& c_;
  Rng rng_;
  TrueWorld world_;
  std::vector<Footprint2> taken_;
  SegmentId next_id_ = 0;
};

}  // namespace

void GeneratorConfig::validate() const {
  if (min_objects < 1 || max_objects < min_objects) throw Error("generator config: need 1 <= min_objects <= max_objects");
  if (min_segments < 1 || max_segments < min_segments)
    throw Error("generator config: need 1 <= min_segments <= max_segments");
  for (double p : {red_probability, clutter_density, hidden_object_probability, hidden_red_probability, lid_probability,
                   bicolor_probability})
    if (!(p >= 0.0 && p <= 1.0)) throw Error("generator config: probabilities must lie in [0,1]");
  if (!(prior_bias > 0.0 && prior_bias < 0.5)) throw Error("generator config: prior_bias must lie in (0,0.5)");
  if (!(touching_prior > 0.0 && touching_prior < 1.0)) throw Error("generator config: touching_prior must lie in (0,1)");
  if (!(ambiguous_bias > 0.0 && ambiguous_bias < 0.5)) throw Error("generator config: ambiguous_bias must lie in (0,0.5)");
  if (!(prior_noise >= 0.0)) throw Error("generator config: prior_noise must be non-negative");
  if (!(point_spacing > 0.0)) throw Error("generator config: point_spacing must be positive");
  if (workspace.contains(camera)) throw Error("generator config: camera must lie outside the workspace");
}

nlohmann::json generator_config_to_json(const GeneratorConfig& c) {
  return {{"min_objects", c.min_objects},
          {"max_objects", c.max_objects},
          {"min_segments", c.min_segments},
          {"max_segments", c.max_segments},
          {"red_probability", c.red_probability},
          {"clutter_density", c.clutter_density},
          {"prior_bias", c.prior_bias},
          {"ambiguous_bias", c.ambiguous_bias},
          {"touching_prior", c.touching_prior},
          {"prior_noise", c.prior_noise},
          {"hidden_object_probability", c.hidden_object_probability},
          {"hidden_red_probability", c.hidden_red_probability},
          {"lid_probability", c.lid_probability},
          {"bicolor_probability", c.bicolor_probability},
          {"point_spacing", c.point_spacing},
          {"camera", {c.camera.x(), c.camera.y(), c.camera.z()}},
          {"workspace",
           {{"min", {c.workspace.min.x(), c.workspace.min.y(), c.workspace.min.z()}},
            {"max", {c.workspace.max.x(), c.workspace.max.y(), c.workspace.max.z()}}}}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
  GeneratorConfig c;
  auto get = [&](const char* k, auto& field) {
    if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
  };
  get("min_objects", c.min_objects);
  get("max_objects", c.max_objects);
  get("min_segments", c.min_segments);
  get("max_segments", c.max_segments);
  get("red_probability", c.red_probability);
  get("clutter_density", c.clutter_density);
  get("prior_bias", c.prior_bias);
  get("ambiguous_bias", c.ambiguous_bias);
  get("touching_prior", c.touching_prior);
  get("prior_noise", c.prior_noise);
  get("hidden_object_probability", c.hidden_object_probability);
  get("hidden_red_probability", c.hidden_red_probability);
  get("lid_probability", c.lid_probability);
  get("bicolor_probability", c.bicolor_probability);
  get("point_spacing", c.point_spacing);
  auto vec = [](const nlohmann::json& a) { return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()); };
  if (j.contains("camera")) c.camera = vec(j.at("camera"));
  if (j.contains("workspace")) {
    c.workspace.min = vec(j.at("workspace").at("min"));
    c.workspace.max = vec(j.at("workspace").at("max"));
  }
  c.validate();
  return c;
}

double box_distance(const Box& a, const Box& b) {
  const Vec3 gap = (a.min - b.max).cwiseMax(b.min - a.max).cwiseMax(Vec3::Zero());
  return gap.norm();
}

namespace {

bool hidden_by(const Vec3& camera, const Vec3& p, SegmentId self, const WorldObject& obj) {
  for (const auto& other : obj.pieces)
    if (other.id != self && segment_hits_box(camera, p, other.box)) return true;
  return false;
}

}  // namespace

std::vector<Vec3> TrueWorld::visible_points(const Piece& piece) const {
  if (!raycast) return piece.points;
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < piece.points.size(); ++i) {
    const Vec3& p = piece.points[i];
    if (piece.normals[i].dot(camera - p) <= 1e-12) continue;
    bool hidden = false;
    for (const auto& obj : objects) {
      if (obj.location == Location::table && hidden_by(camera, p, piece.id, obj)) {
        hidden = true;
        break;
      }
    }
    if (!hidden) out.push_back(p);
  }
  return out;
}

std::size_t TrueWorld::exposed_count(const Piece& piece) const {
  const WorldObject* own = nullptr;
  for (const auto& obj : objects)
    for (const auto& q : obj.pieces)
      if (q.id == piece.id) own = &obj;
  std::size_t n = 0;
  for (std::size_t i = 0; i < piece.points.size(); ++i) {
    const Vec3& p = piece.points[i];
    if (piece.normals[i].dot(camera - p) <= 1e-12) continue;
    if (own && hidden_by(camera, p, piece.id, *own)) continue;
    ++n;
  }
  return n;
}

double TrueWorld::prior_center(SegmentId a, SegmentId b) const {
  int oa = -1, ob = -1;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    for (const auto& p : objects[k].pieces) {
      if (p.id == a) oa = static_cast<int>(k);
      if (p.id == b) ob = static_cast<int>(k);
    }
  }
  if (oa < 0 || ob < 0) throw Error("prior_center: unknown segment");
  if (fixed_edges) {
    auto it = fixed_priors.find(SegmentPair::of(a, b));
    return it == fixed_priors.end() ? 0.5 : it->second;
  }
  if (oa == ob) {
    const bool amb = std::find(ambiguous_segments.begin(), ambiguous_segments.end(), SegmentPair::of(a, b)) !=
                     ambiguous_segments.end();
    return 0.5 + (amb ? ambiguous_bias : prior_bias);
  }
  const auto key = std::make_pair(std::min(oa, ob), std::max(oa, ob));
  const bool amb = std::find(ambiguous_objects.begin(), ambiguous_objects.end(), key) != ambiguous_objects.end();
  return amb ? touching_prior : 0.5 - prior_bias;
}

Scene TrueWorld::view(std::uint64_t view_seed) const {
  Scene s;
  s.camera_origin = camera;
  s.workspace = workspace;
  std::vector<TrueObject> truth;
  std::vector<const Piece*> shown;
  for (const auto& obj : objects) {
    if (obj.location != Location::table) continue;
    TrueObject t;
    t.is_red = obj.is_red;
    for (const auto& piece : obj.pieces) {
      auto pts = visible_points(piece);
      if (pts.size() < 3) continue;
      Segment seg;
      seg.id = piece.id;
      seg.visible_fraction = piece.base_visible;
      if (raycast) {
        const auto exposed = exposed_count(piece);
        seg.visible_fraction =
            exposed == 0 ? 0.0 : std::min(1.0, static_cast<double>(pts.size()) / static_cast<double>(exposed));
      }
      seg.points = std::move(pts);
      seg.centroid = centroid_of(seg.points);
      seg.red_fraction = piece.red_fraction;
      s.segments.push_back(std::move(seg));
      shown.push_back(&piece);
      t.segment_ids.push_back(piece.id);
    }
    if (!t.segment_ids.empty()) truth.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < shown.size(); ++i) {
    for (std::size_t j = i + 1; j < shown.size(); ++j) {
      const auto pair = SegmentPair::of(shown[i]->id, shown[j]->id);
      const bool edge = fixed_edges ? std::binary_search(fixed_edges->begin(), fixed_edges->end(), pair)
                                    : box_distance(shown[i]->box, shown[j]->box) <= 0.005;
      if (edge) s.candidate_edges.push_back(pair);
      if (fixed_edges && !fixed_priors.count(pair)) continue;
      const double p = prior_center(pair.a, pair.b) + prior_noise * noise_normal(seed, view_seed, pair.a, pair.b);
      s.pair_prior[pair] = prior_noise > 0.0 ? std::clamp(p, 0.02, 0.98) : p;
    }
  }
  std::sort(s.candidate_edges.begin(), s.candidate_edges.end());
  s.ground_truth = std::move(truth);
  return s;
}

int TrueWorld::object_of_segment(SegmentId id) const {
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (objects[k].location != Location::table) continue;
    for (const auto& p : objects[k].pieces)
      if (p.id == id) return static_cast<int>(k);
  }
  return -1;
}

std::vector<Vec3> TrueWorld::table_points_except(int except) const {
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    if (static_cast<int>(k) == except || objects[k].location != Location::table) continue;
    for (const auto& p : objects[k].pieces) out.insert(out.end(), p.points.begin(), p.points.end());
  }
  return out;
}

int TrueWorld::table_object_count() const {
  return static_cast<int>(
      std::count_if(objects.begin(), objects.end(), [](const WorldObject& o) { return o.location == Location::table; }));
}

double TrueWorld::visible_fraction(int idx) const {
  const auto& obj = objects.at(static_cast<std::size_t>(idx));
  double vis = 0.0, total = 0.0;
  for (const auto& piece : obj.pieces) {
    if (raycast) {
      vis += static_cast<double>(visible_points(piece).size());
      total += static_cast<double>(exposed_count(piece));
    } else {
      vis += piece.base_visible * static_cast<double>(piece.points.size());
      total += static_cast<double>(piece.points.size());
    }
  }
  return total > 0.0 ? std::min(1.0, vis / total) : 0.0;
}

TrueWorld world_from_scene(const Scene& scene, double prior_noise) {
  validate(scene);
  if (!scene.ground_truth) throw Error("world_from_scene: scene has no ground_truth");
  TrueWorld w;
  w.camera = scene.camera_origin;
  w.workspace = scene.workspace;
  w.prior_noise = prior_noise;
  w.fixed_edges = scene.candidate_edges;
  std::sort(w.fixed_edges->begin(), w.fixed_edges->end());
  w.fixed_priors = scene.pair_prior;
  w.raycast = false;
  for (const auto& t : *scene.ground_truth) {
    WorldObject obj;
    obj.is_red = t.is_red;
    for (auto id : t.segment_ids) {
      const auto& seg = scene.segment(id);
      Piece p;
      p.id = id;
      p.red_fraction = seg.red_fraction;
      p.points = seg.points;
      p.box.min = p.box.max = seg.points.front();
      for (const auto& q : seg.points) {
        p.box.min = p.box.min.cwiseMin(q);
        p.box.max = p.box.max.cwiseMax(q);
        p.normals.push_back((scene.camera_origin - q).normalized());
      }
      p.base_visible = seg.visible_fraction;
      obj.pieces.push_back(std::move(p));
    }
    w.objects.push_back(std::move(obj));
  }
  return w;
}

TrueWorld generate_world(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  return Builder(config, seed).build();
}

}  // namespace objcomp

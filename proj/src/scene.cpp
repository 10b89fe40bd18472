#include "objcomp/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace objcomp {

using nlohmann::json;

namespace {

std::string pair_str(const SegmentPair& e) {
  return "(" + std::to_string(e.a) + "," + std::to_string(e.b) + ")";
}

Vec3 vec3_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(field + ": expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::optional<double> Scene::prior(SegmentId a, SegmentId b) const {
  auto it = pair_prior.find(SegmentPair::of(a, b));
  if (it == pair_prior.end()) return std::nullopt;
  return it->second;
}

int Scene::index_of(SegmentId id) const {
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (segments[i].id == id) return static_cast<int>(i);
  return -1;
}

const Segment& Scene::segment(SegmentId id) const {
  const int i = index_of(id);
  if (i < 0) throw Error("unknown segment id " + std::to_string(id));
  return segments[static_cast<std::size_t>(i)];
}

std::vector<SegmentId> Scene::segment_ids() const {
  std::vector<SegmentId> ids;
  ids.reserve(segments.size());
  for (const auto& s : segments) ids.push_back(s.id);
  return ids;
}

Vec3 centroid_of(const std::vector<Vec3>& points) {
  Vec3 c = Vec3::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

void validate(const Scene& scene) {
  std::unordered_set<SegmentId> ids;
  for (const auto& s : scene.segments) {
    const std::string where = "segments[id=" + std::to_string(s.id) + "]";
    if (!ids.insert(s.id).second) throw Error(where + ": duplicate segment id");
    if (s.points.empty()) throw Error(where + ".points: must be non-empty");
    if (!(s.red_fraction >= 0.0 && s.red_fraction <= 1.0)) throw Error(where + ".red_fraction: must lie in [0,1]");
    if (!(s.visible_fraction >= 0.0 && s.visible_fraction <= 1.0))
      throw Error(where + ".visible_fraction: must lie in [0,1]");
    if ((s.centroid - centroid_of(s.points)).norm() > 1e-9) throw Error(where + ".centroid: must equal the mean of points");
  }
  std::set<SegmentPair> seen;
  for (const auto& e : scene.candidate_edges) {
    if (e.a == e.b) throw Error("candidate_edges: edge " + pair_str(e) + " connects a segment to itself");
    if (!ids.count(e.a) || !ids.count(e.b)) throw Error("candidate_edges: edge " + pair_str(e) + " references an unknown segment");
    if (e.a > e.b) throw Error("candidate_edges: edge " + pair_str(e) + " is not normalized");
    if (!seen.insert(e).second) throw Error("candidate_edges: duplicate edge " + pair_str(e));
    if (!scene.pair_prior.count(e)) throw Error("missing pair_prior for candidate edge " + pair_str(e));
  }
  for (const auto& [e, p] : scene.pair_prior) {
    if (!ids.count(e.a) || !ids.count(e.b) || e.a == e.b)
      throw Error("pair_prior: entry " + pair_str(e) + " references an unknown segment pair");
    if (!(p > 0.0 && p < 1.0))
      throw Error("pair_prior " + pair_str(e) + ": prior must lie strictly in (0,1)");
  }
  if (!(scene.workspace.min.array() < scene.workspace.max.array()).all())
    throw Error("workspace: min must be strictly below max on every axis");
  if (scene.ground_truth) {
    std::unordered_set<SegmentId> covered;
    for (const auto& obj : *scene.ground_truth) {
      for (auto id : obj.segment_ids) {
        if (!ids.count(id)) throw Error("ground_truth: unknown segment id " + std::to_string(id));
        if (!covered.insert(id).second) throw Error("ground_truth: segment " + std::to_string(id) + " in two objects");
      }
    }
    if (covered.size() != ids.size()) throw Error("ground_truth: objects must partition the segment ids");
  }
}

Scene scene_from_json(const json& j) {
  Scene scene;
  try {
    if (!j.contains("format") || j.at("format").get<std::string>() != kSceneFormat)
      throw Error(std::string("format: expected \"") + kSceneFormat + "\"");
    for (const auto& js : j.at("segments")) {
      Segment s;
      s.id = js.at("id").get<int>();
      for (const auto& p : js.at("points")) s.points.push_back(vec3_from(p, "segments.points"));
      s.red_fraction = js.value("red_fraction", 0.0);
      s.visible_fraction = js.value("visible_fraction", 1.0);
      s.centroid = centroid_of(s.points);
      scene.segments.push_back(std::move(s));
    }
    for (const auto& je : j.value("candidate_edges", json::array())) {
      if (!je.is_array() || je.size() != 2) throw Error("candidate_edges: each edge must be a pair of ids");
      scene.candidate_edges.push_back(SegmentPair::of(je[0].get<int>(), je[1].get<int>()));
    }
    for (const auto& jp : j.value("pair_prior", json::array())) {
      const auto& je = jp.at("edge");
      if (!je.is_array() || je.size() != 2) throw Error("pair_prior: edge must be a pair of ids");
      scene.pair_prior[SegmentPair::of(je[0].get<int>(), je[1].get<int>())] = jp.at("p").get<double>();
    }
    scene.camera_origin = vec3_from(j.at("camera_origin"), "camera_origin");
    scene.workspace.min = vec3_from(j.at("workspace").at("min"), "workspace.min");
    scene.workspace.max = vec3_from(j.at("workspace").at("max"), "workspace.max");
    if (j.contains("ground_truth")) {
      std::vector<TrueObject> gt;
      for (const auto& jo : j.at("ground_truth")) {
        TrueObject o;
        o.segment_ids = jo.at("segment_ids").get<std::vector<int>>();
        std::sort(o.segment_ids.begin(), o.segment_ids.end());
        o.is_red = jo.value("is_red", false);
        gt.push_back(std::move(o));
      }
      scene.ground_truth = std::move(gt);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("scene parse error: ") + e.what());
  }
  validate(scene);
  return scene;
}

json scene_to_json(const Scene& scene) {
  json j;
  j["format"] = kSceneFormat;
  j["segments"] = json::array();
  for (const auto& s : scene.segments) {
    json js;
    js["id"] = s.id;
    js["points"] = json::array();
    for (const auto& p : s.points) js["points"].push_back(vec3_to(p));
    js["red_fraction"] = s.red_fraction;
    js["visible_fraction"] = s.visible_fraction;
    j["segments"].push_back(std::move(js));
  }
  j["candidate_edges"] = json::array();
  for (const auto& e : scene.candidate_edges) j["candidate_edges"].push_back({e.a, e.b});
  j["pair_prior"] = json::array();
  for (const auto& [e, p] : scene.pair_prior) j["pair_prior"].push_back({{"edge", {e.a, e.b}}, {"p", p}});
  j["camera_origin"] = vec3_to(scene.camera_origin);
  j["workspace"] = {{"min", vec3_to(scene.workspace.min)}, {"max", vec3_to(scene.workspace.max)}};
  if (scene.ground_truth) {
    j["ground_truth"] = json::array();
    for (const auto& o : *scene.ground_truth)
      j["ground_truth"].push_back({{"segment_ids", o.segment_ids}, {"is_red", o.is_red}});
  }
  return j;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("no such file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("scene parse error in " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << scene_to_json(scene).dump(1) << '\n';
}

// ---------------------------------------------------------------------------

std::optional<double> ray_exit_distance(const Vec3& origin, const Vec3& direction, const Box& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(direction[k]) < 1e-15) {
      if (origin[k] < box.min[k] || origin[k] > box.max[k]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[k] - origin[k]) / direction[k];
    double t1 = (box.max[k] - origin[k]) / direction[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_far < t_near || t_far < 0.0) return std::nullopt;
  return t_far;
}

namespace {

std::optional<double> ray_entry_distance(const Vec3& origin, const Vec3& direction, const Box& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(direction[k]) < 1e-15) continue;
    double t0 = (box.min[k] - origin[k]) / direction[k];
    double t1 = (box.max[k] - origin[k]) / direction[k];
    t_near = std::max(t_near, std::min(t0, t1));
  }
  return t_near;
}

}  // namespace

double voxel_shadow_volume(const Vec3& camera, const Vec3& voxel_center, double edge, const Box& workspace) {
  const Vec3 offset = voxel_center - camera;
  const double r0 = offset.norm();
  if (r0 <= edge) throw Error("hidden_volume: camera coincides with a voxel; projection undefined");
  const Vec3 dir = offset / r0;
  const auto exit = ray_exit_distance(camera, dir, workspace);
  if (!exit) return 0.0;
  // where the central ray leaves the cube
  const double r_far = r0 + 0.5 * edge / dir.cwiseAbs().maxCoeff();
  const double lower = std::max(r_far, ray_entry_distance(camera, dir, workspace).value_or(r_far));
  const double upper = *exit;
  if (upper - lower <= 1e-12 * edge) return 0.0;
  // silhouette area of a cube seen along dir, placed at the near side
  const double silhouette = edge * edge * (std::abs(dir.x()) + std::abs(dir.y()) + std::abs(dir.z()));
  const double r_near = r0 - 0.5 * edge;
  const double solid_angle = silhouette / (r_near * r_near);
  return solid_angle / 3.0 * (upper * upper * upper - lower * lower * lower);
}

HiddenVolumeReport hidden_volume(const Scene& scene, const HiddenVolumeOptions& options) {
  const double e = options.voxel_edge;
  if (!(e > 0.0)) throw Error("hidden_volume: voxel edge must be positive");
  if (scene.workspace.contains(scene.camera_origin))
    throw Error("hidden_volume: camera inside the workspace; projection onto the boundary is undefined");

  HiddenVolumeReport report;
  double height_sum = 0.0;
  for (const auto& s : scene.segments) {
    struct CellHash {
      std::size_t operator()(const Eigen::Vector3i& c) const {
        return static_cast<std::size_t>(c.x() * 73856093 ^ c.y() * 19349663 ^ c.z() * 83492791);
      }
    };
    struct CellEq {
      bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const { return a == b; }
    };
    std::unordered_set<Eigen::Vector3i, CellHash, CellEq> cells;
    double max_z = -std::numeric_limits<double>::infinity();
    for (const auto& p : s.points) {
      cells.insert(Eigen::Vector3i(static_cast<int>(std::floor(p.x() / e)), static_cast<int>(std::floor(p.y() / e)),
                                   static_cast<int>(std::floor(p.z() / e))));
      max_z = std::max(max_z, p.z());
    }
    // deterministic summation order
    std::vector<Eigen::Vector3i> ordered(cells.begin(), cells.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
    });
    double v = 0.0;
    for (const auto& c : ordered) {
      const Vec3 center = (c.cast<double>().array() + 0.5).matrix() * e;
      v += voxel_shadow_volume(scene.camera_origin, center, e, scene.workspace);
    }
    report.per_segment_hidden[s.id] = v;
    height_sum += std::max(0.0, max_z - scene.workspace.min.z());
  }
  // summed in id order so the total is invariant under segment permutation
  for (const auto& [id, v] : report.per_segment_hidden) report.v_hidden += v;

  const Vec3 ext = scene.workspace.extent();
  report.floor_area = ext.x() * ext.y();
  report.mean_patch_height = scene.segments.empty() ? 0.0 : height_sum / static_cast<double>(scene.segments.size());
  report.v_total = 2.0 * report.mean_patch_height * report.floor_area;
  report.v_visible = report.v_total - report.v_hidden;
  if (report.v_visible < 0.0) {
    report.v_visible = 0.0;
    report.visible_clamped = true;
  }
  return report;
}

std::map<SegmentId, SegmentSet> segment_occluders(const Scene& scene, double radius) {
  std::map<SegmentId, SegmentSet> result;
  const Vec3& cam = scene.camera_origin;
  for (const auto& target : scene.segments) {
    SegmentSet occ;
    for (const auto& other : scene.segments) {
      if (other.id == target.id) continue;
      bool found = false;
      for (const auto& a : target.points) {
        const Vec3 ua = a - cam;
        const double ra = ua.norm();
        const Vec3 dir = ua / ra;
        for (const auto& b : other.points) {
          const Vec3 ub = b - cam;
          const double along = ub.dot(dir);
          if (along <= 0.0 || along >= ra - 1e-9) continue;
          if ((ub - along * dir).squaredNorm() < radius * radius) {
            found = true;
            break;
          }
        }
        if (found) break;
      }
      if (found) occ.push_back(other.id);
    }
    std::sort(occ.begin(), occ.end());
    result[target.id] = std::move(occ);
  }
  return result;
}

}  // namespace objcomp

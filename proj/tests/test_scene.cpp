#include "doctest.h"
#include "fixtures.hpp"

#include "objcomp/generator.hpp"
#include "objcomp/rng.hpp"
#include "objcomp/scene.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace objcomp;
using objcomp::testing::SceneBuilder;

namespace {

nlohmann::json two_segment_json() {
  SceneBuilder b;
  b.patch(1, Vec3(0.0, 0.0, 0.02)).patch(2, Vec3(0.03, 0.0, 0.02)).edge(1, 2, 0.7);
  return scene_to_json(b.build());
}

std::string error_of(const nlohmann::json& j) {
  try {
    scene_from_json(j);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("scene file round trip") {
  const auto j = two_segment_json();
  const Scene s = scene_from_json(j);
  CHECK(s.segments.size() == 2);
  CHECK(s.candidate_edges.size() == 1);
  CHECK(s.prior(2, 1).value() == doctest::Approx(0.7));
  CHECK(scene_to_json(s) == j);

  const auto path = std::filesystem::temp_directory_path() / "objcomp_scene_rt.json";
  save_scene(s, path);
  CHECK(scene_to_json(load_scene(path)) == j);
  std::filesystem::remove(path);
}

TEST_CASE("scene validation errors") {
  auto j = two_segment_json();
  SUBCASE("edge without prior") {
    j["pair_prior"] = nlohmann::json::array();
    CHECK(error_of(j).find("missing pair_prior") != std::string::npos);
  }
  SUBCASE("prior of zero") {
    j["pair_prior"][0]["p"] = 0.0;
    CHECK(error_of(j).find("prior must lie strictly in (0,1)") != std::string::npos);
  }
  SUBCASE("self edge") {
    j["candidate_edges"][0] = {1, 1};
    CHECK_FALSE(error_of(j).empty());
  }
  SUBCASE("wrong format tag") {
    j["format"] = "something-else";
    CHECK(error_of(j).find("format") != std::string::npos);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_scene("/nonexistent/objcomp/scene.json"), Error); }
}

TEST_CASE("ray exit distance and voxel shadow") {
  const Box box{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  CHECK(ray_exit_distance(Vec3::Zero(), Vec3(1, 0, 0), box).value() == doctest::Approx(1.0));
  CHECK_FALSE(ray_exit_distance(Vec3(5, 5, 5), Vec3(1, 0, 0), box).has_value());
  // a voxel on the far workspace face casts no shadow
  const Box ws{Vec3(-0.25, -0.25, 0.0), Vec3(0.25, 0.25, 0.3)};
  CHECK(voxel_shadow_volume(Vec3(0, -0.7, 0.6), Vec3(0.0, 0.25 - 0.005, 0.15), 0.01, ws) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("voxel shadow against Monte Carlo ray sampling") {
  // camera at the origin, voxel at distance 1 on +x, workspace a slab behind it
  const Vec3 cam = Vec3::Zero();
  const Vec3 c(1.0, 0.0, 0.0);
  const double e = 0.1;
  const Box ws{Vec3(-0.5, -1.0, -1.0), Vec3(3.0, 1.0, 1.0)};
  const double v = voxel_shadow_volume(cam, c, e, ws);

  // independent oracle: sample points in the bounding region behind the voxel and test whether the
  // segment from the camera crosses the voxel
  Rng rng(5);
  const int n = 400000;
  const Box region{Vec3(1.0, -0.2, -0.2), Vec3(3.0, 0.2, 0.2)};
  int hit = 0;
  for (int k = 0; k < n; ++k) {
    const Vec3 p(rng.uniform(region.min.x(), region.max.x()), rng.uniform(region.min.y(), region.max.y()),
                 rng.uniform(region.min.z(), region.max.z()));
    if (p.x() < c.x() + 0.5 * e) continue;
    // slab test: does the segment camera -> p pass through the voxel?
    double lo = 0.0, hi = 1.0;
    for (int d = 0; d < 3; ++d) {
      const double a = c[d] - 0.5 * e - cam[d], bnd = c[d] + 0.5 * e - cam[d], dir = p[d] - cam[d];
      if (std::abs(dir) < 1e-15) {
        if (a > 0 || bnd < 0) lo = 2.0;
        continue;
      }
      const double t1 = a / dir, t2 = bnd / dir;
      lo = std::max(lo, std::min(t1, t2));
      hi = std::min(hi, std::max(t1, t2));
    }
    if (lo <= hi) ++hit;
  }
  const double vol = (region.max - region.min).prod() * hit / n;
  CHECK(v == doctest::Approx(vol).epsilon(0.02));
}

TEST_CASE("generated scenes") {
  GeneratorConfig cfg;
  cfg.min_objects = cfg.max_objects = 3;
  cfg.min_segments = cfg.max_segments = 2;
  const Scene a = generate_scene(cfg, 1);
  REQUIRE(a.ground_truth.has_value());
  CHECK(a.ground_truth->size() == 3);
  CHECK(a.segments.size() == 6);
  CHECK(scene_to_json(generate_scene(cfg, 1)).dump() == scene_to_json(a).dump());

  SUBCASE("noise-free priors separate objects") {
    cfg.prior_noise = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Scene s = generate_scene(cfg, seed);
      std::map<SegmentId, int> obj;
      for (std::size_t k = 0; k < s.ground_truth->size(); ++k)
        for (auto id : (*s.ground_truth)[k].segment_ids) obj[id] = static_cast<int>(k);
      for (const auto& [e, p] : s.pair_prior) {
        if (obj[e.a] == obj[e.b])
          CHECK(p > 0.5);
        else
          CHECK(p < 0.5);
      }
    }
  }
  SUBCASE("zero objects is infeasible") {
    cfg.min_objects = cfg.max_objects = 0;
    CHECK_THROWS_AS(generate_scene(cfg, 1), Error);
  }
}

TEST_CASE("hidden volume report") {
  SceneBuilder b;
  b.patch(1, Vec3(0.0, 0.0, 0.05), 0.0, 1.0, 3);
  const Scene s = b.build();
  const auto r = hidden_volume(s);
  CHECK(r.v_hidden > 0.0);
  CHECK(r.per_segment_hidden.at(1) == doctest::Approx(r.v_hidden));
  if (!r.visible_clamped) CHECK(r.v_total == doctest::Approx(r.v_hidden + r.v_visible));
}

#include "objcomp/belief.hpp"
#include "objcomp/generator.hpp"
#include "objcomp/grasp.hpp"
#include "objcomp/sampler.hpp"
#include "objcomp/scene.hpp"
#include "objcomp/sim.hpp"
#include "objcomp/stats.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace objcomp;

namespace {

// Dicts cross the boundary as JSON text; the Python wrapper does the (de)serialization.
nlohmann::json parse(const std::string& s) { return s.empty() ? nlohmann::json::object() : nlohmann::json::parse(s); }

std::string generate_scene_json(const std::string& config, std::uint64_t seed) {
  const GeneratorConfig c = generator_config_from_json(parse(config));
  return scene_to_json(generate_scene(c, seed)).dump();
}

void validate_scene_json(const std::string& scene) { validate(scene_from_json(parse(scene))); }

std::string sample_json(const std::string& scene_text, int h_size, int n_ess_target, std::uint64_t seed) {
  const Scene scene = scene_from_json(parse(scene_text));
  const CompositionSpace space(scene);
  SamplerConfig cfg;
  cfg.h_size = h_size;
  cfg.n_ess_target = n_ess_target;
  cfg.seed = seed;
  const CompositionSet set = sample_compositions(space, cfg);
  nlohmann::json out;
  out["edges"] = nlohmann::json::array();
  for (std::size_t w = 0; w < space.edge_count(); ++w) {
    const auto [a, b] = space.edge(w);
    out["edges"].push_back({space.segment_id(a), space.segment_id(b)});
  }
  out["samples"] = nlohmann::json::array();
  for (const auto& s : set.samples) {
    std::vector<bool> bits(s.size());
    for (std::size_t w = 0; w < s.size(); ++w) bits[w] = s[w];
    out["samples"].push_back(bits);
  }
  out["ess"] = set.ess_achieved;
  out["cftp_horizon"] = set.cftp_horizon;
  out["truncated"] = set.truncated;
  out["chain_length"] = set.chain_length;
  return out.dump();
}

py::dict grasp_dict(const std::vector<std::array<double, 3>>& points) {
  std::vector<Vec3> cloud;
  cloud.reserve(points.size());
  for (const auto& p : points) cloud.emplace_back(p[0], p[1], p[2]);
  const GraspAction g = synthesize_grasp(cloud);
  const auto arr = [](const Vec3& v) { return std::array<double, 3>{v.x(), v.y(), v.z()}; };
  py::dict d;
  d["contact_a"] = arr(g.contact_a);
  d["contact_b"] = arr(g.contact_b);
  d["centroid"] = arr(g.centroid);
  d["hand_rotation"] = g.hand_rotation;
  d["finger_distance"] = g.finger_distance;
  return d;
}

std::string episode_json(const std::string& world_source, std::uint64_t generator_seed, const std::string& method,
                         const std::string& config, std::uint64_t seed) {
  const nlohmann::json src = parse(world_source);
  const TrueWorld world = src.contains("format") ? world_from_scene(scene_from_json(src))
                                                 : generate_world(generator_config_from_json(src), generator_seed);
  EpisodeConfig cfg = episode_config_from_json(parse(config));
  return episode_to_json(run_episode(world, method_from_string(method), cfg, seed)).dump();
}

}  // namespace

PYBIND11_MODULE(_objcomp, m) {
  py::register_exception<Error>(m, "ObjcompError", PyExc_ValueError);

  m.def("generate_scene_json", &generate_scene_json, py::arg("config"), py::arg("seed"));
  m.def("validate_scene_json", &validate_scene_json, py::arg("scene"));
  m.def("sample_json", &sample_json, py::arg("scene"), py::arg("h_size"), py::arg("n_ess_target"), py::arg("seed"));
  m.def("episode_json", &episode_json, py::arg("world"), py::arg("generator_seed"), py::arg("method"),
        py::arg("config"), py::arg("seed"));
  m.def("synthesize_grasp", &grasp_dict, py::arg("points"));
  m.def("hidden_object_probability", &hidden_object_probability, py::arg("n"));
  m.def(
      "mann_whitney_u",
      [](const std::vector<double>& a, const std::vector<double>& b) { return mann_whitney_u(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "effective_sample_size", [](const std::vector<double>& t) { return effective_sample_size(t); },
      py::arg("trace"));
}

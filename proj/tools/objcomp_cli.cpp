// objcomp command-line tool: composition sampling, scene generation and method evaluation.

#include "objcomp/composition.hpp"
#include "objcomp/generator.hpp"
#include "objcomp/sampler.hpp"
#include "objcomp/scene.hpp"
#include "objcomp/sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace objcomp;

namespace {

/// Errors the user can fix by changing the invocation; they exit with code 2.
struct UsageError : Error {
  using Error::Error;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("no such file: " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw UsageError("cannot parse " + path.string() + ": " + e.what());
  }
}

Scene load_scene_checked(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("no such file: " + path.string());
  try {
    return load_scene(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct SampleArgs {
  std::string scene;
  std::uint64_t seed = 0;
  int ess_target = 200;
  int h_size = 2000;
  int n_start = 100;
  std::int64_t t_max = 131072;
  std::string out;
  bool with_samples = true;
};

int cmd_sample(const SampleArgs& a) {
  const Scene scene = load_scene_checked(a.scene);
  SamplerConfig sc;
  sc.seed = a.seed;
  sc.n_ess_target = a.ess_target;
  sc.h_size = a.h_size;
  sc.n_start = a.n_start;
  sc.t_max = a.t_max;
  try {
    sc.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const CompositionSpace space(scene);
  const auto set = sample_compositions(space, sc);

  const std::size_t m = space.edge_count();
  std::vector<double> marginal(m, 0.0);
  std::vector<double> joined(m, 0.0);
  for (const auto& s : set.samples) {
    const auto labels = component_labels(s, space);
    for (std::size_t w = 0; w < m; ++w) {
      if (s[w]) marginal[w] += 1.0;
      const auto [i, j] = space.edge(w);
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) joined[w] += 1.0;
    }
  }
  json edges = json::array();
  const double n = static_cast<double>(std::max<std::size_t>(1, set.samples.size()));
  for (std::size_t w = 0; w < m; ++w) {
    const auto [i, j] = space.edge(w);
    edges.push_back({{"a", space.segment_id(i)},
                     {"b", space.segment_id(j)},
                     {"prior", space.prior(i, j)},
                     {"connected", marginal[w] / n},
                     {"same_object", joined[w] / n}});
  }
  json report{{"scene", a.scene},
              {"seed", a.seed},
              {"segments", space.segment_ids()},
              {"edges", std::move(edges)},
              {"diagnostics",
               {{"samples", set.samples.size()},
                {"cftp_collapsed", set.cftp_collapsed},
                {"cftp_horizon", set.cftp_horizon},
                {"ess", set.ess_achieved},
                {"truncated", set.truncated},
                {"chain_length", set.chain_length}}}};
  if (a.with_samples) {
    json samples = json::array();
    for (const auto& s : set.samples) samples.push_back(s.to_string());
    report["samples"] = std::move(samples);
  }
  const std::string text = report.dump(2) + "\n";
  if (a.out.empty())
    std::cout << text;
  else
    write_text(a.out, text);
  if (set.truncated) std::cerr << "warning: ESS target not reached before t_max\n";
  return 0;
}

struct GenerateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  GeneratorConfig gc;
  if (!a.config.empty()) {
    const json j = read_json(a.config);
    gc = generator_config_from_json(j.contains("generator") ? j.at("generator") : j);
  }
  try {
    gc.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const Scene scene = generate_scene(gc, a.seed);
  if (a.out.empty())
    std::cout << scene_to_json(scene).dump(2) << "\n";
  else
    save_scene(scene, a.out);
  return 0;
}

struct RunArgs {
  std::string config;
  std::vector<std::string> scenes;
  std::optional<int> generate;
  std::vector<std::string> methods;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  std::optional<int> particles;
  std::optional<int> ess_target;
  std::optional<int> h_size;
  std::optional<int> n_start;
  std::optional<std::int64_t> t_max;
  std::optional<int> trials;
  std::optional<std::string> task;
  bool hallucinate = false;
  std::string out;
};

/// Resolved run configuration: the config file, then command-line overrides.
struct RunConfig {
  std::vector<std::string> scene_paths;
  std::optional<GeneratorConfig> generator;
  int generate_count = 0;
  std::vector<Method> methods;
  EpisodeConfig episode;
  int trials = 1;
  std::uint64_t seed = 0;
  fs::path out = "objcomp_out";
};

RunConfig resolve(const RunArgs& a) {
  RunConfig rc;
  json j = json::object();
  if (!a.config.empty()) j = read_json(a.config);
  try {
    if (j.contains("scenes")) rc.scene_paths = j.at("scenes").get<std::vector<std::string>>();
    if (j.contains("generator")) {
      rc.generator = generator_config_from_json(j.at("generator"));
      rc.generate_count = j.at("generator").value("count", 20);
    }
    if (j.contains("methods"))
      for (const auto& m : j.at("methods")) rc.methods.push_back(method_from_string(m.get<std::string>()));
    if (j.contains("episode")) rc.episode = episode_config_from_json(j.at("episode"));
    rc.trials = j.value("trials", 1);
    rc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("out")) rc.out = j.at("out").get<std::string>();

    if (!a.scenes.empty()) {
      rc.scene_paths = a.scenes;
      rc.generator.reset();
    }
    if (a.generate) {
      if (!a.scenes.empty()) throw UsageError("--scene and --generate are mutually exclusive");
      rc.scene_paths.clear();
      if (!rc.generator) rc.generator = GeneratorConfig{};
      rc.generate_count = *a.generate;
    }
    if (!a.methods.empty()) {
      rc.methods.clear();
      for (const auto& m : a.methods) rc.methods.push_back(method_from_string(m));
    }
    if (rc.methods.empty()) rc.methods = {Method::best_seg, Method::max_util, Method::pomdp};
    if (a.hallucinate && std::find(rc.methods.begin(), rc.methods.end(), Method::pomdp_halluc) == rc.methods.end())
      rc.methods.push_back(Method::pomdp_halluc);
    if (a.seed) rc.seed = *a.seed;
    if (a.task) rc.episode.task.kind = task_kind_from_string(*a.task);
    if (a.horizon) rc.episode.planner.horizon = rc.episode.task.horizon = *a.horizon;
    if (a.particles) rc.episode.planner.particles_per_node = *a.particles;
    if (a.ess_target) rc.episode.sampler.n_ess_target = *a.ess_target;
    if (a.h_size) rc.episode.sampler.h_size = *a.h_size;
    if (a.n_start) rc.episode.sampler.n_start = *a.n_start;
    if (a.t_max) rc.episode.sampler.t_max = *a.t_max;
    if (a.trials) rc.trials = *a.trials;
    if (!a.out.empty()) rc.out = a.out;

    if (rc.scene_paths.empty() == !rc.generator)
      throw UsageError("exactly one of scene paths (--scene) or a generator (--generate) is required");
    if (rc.generator) {
      rc.generator->validate();
      if (rc.generate_count < 1) throw UsageError("--generate needs a positive scene count");
    }
    if (rc.methods.size() < 2) throw UsageError("at least two methods are required");
    if (rc.trials < 1) throw UsageError("trials must be positive");
    rc.episode.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return rc;
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

int cmd_run(const RunArgs& a) {
  const RunConfig rc = resolve(a);
  std::vector<SceneSource> scenes;
  if (rc.generator) {
    for (int k = 0; k < rc.generate_count; ++k) {
      const auto s = mix_keys({rc.seed, 0x5CE0u, static_cast<std::uint64_t>(k)});
      scenes.push_back({"gen-" + std::to_string(k), generate_world(*rc.generator, s)});
    }
  } else {
    for (const auto& p : rc.scene_paths) {
      const Scene scene = load_scene_checked(p);
      if (!scene.ground_truth) throw UsageError("scene " + p + " has no ground_truth; it cannot be simulated");
      scenes.push_back({fs::path(p).stem().string(), world_from_scene(scene)});
    }
  }

  const auto ev = evaluate_methods(scenes, rc.methods, rc.trials, rc.seed, rc.episode);

  fs::create_directories(rc.out);
  std::ostringstream episodes, timing, rewards;
  timing << "scene_id,method,seed,pre_processing_s,belief_s,planning_s,total_s\n";
  rewards << "scene_id,method,seed,total_reward,steps,termination\n";
  std::size_t completed = 0;
  for (const auto& r : ev.episodes) {
    episodes << episode_to_json(r).dump() << "\n";
    const auto& t = r.times;
    timing << r.scene_id << ',' << to_string(r.method) << ',' << r.seed << ',' << fmt(t.pre_processing, 6) << ','
           << fmt(t.belief, 6) << ',' << fmt(t.planning, 6) << ','
           << fmt(t.pre_processing + t.belief + t.planning, 6) << "\n";
    rewards << r.scene_id << ',' << to_string(r.method) << ',' << r.seed << ',' << r.total_reward << ','
            << r.steps.size() << ',' << r.termination << "\n";
    if (!r.failed()) ++completed;
  }
  json report = report_to_json(ev.report);
  report["seed"] = rc.seed;
  report["trials"] = rc.trials;
  report["scenes"] = scenes.size();
  report["episode_config"] = episode_config_to_json(rc.episode);
  if (rc.generator) report["generator"] = generator_config_to_json(*rc.generator);
  write_text(rc.out / "episodes.jsonl", episodes.str());
  write_text(rc.out / "report.json", report.dump(2) + "\n");
  write_text(rc.out / "timing.csv", timing.str());
  write_text(rc.out / "rewards.csv", rewards.str());

  std::printf("%-14s %9s %7s %9s %20s\n", "method", "episodes", "failed", "mean", "95% CI");
  for (const auto& m : ev.report.methods)
    std::printf("%-14s %9zu %7zu %9s %20s\n", std::string(to_string(m.method)).c_str(), m.episodes, m.failed,
                fmt(m.reward.mean).c_str(), ("[" + fmt(m.reward.lo) + ", " + fmt(m.reward.hi) + "]").c_str());
  for (const auto& p : ev.report.pairwise)
    std::printf("p(%s > %s) = %.4g\n", std::string(to_string(ev.report.methods[p.later].method)).c_str(),
                std::string(to_string(ev.report.methods[p.earlier].method)).c_str(), p.p_value);
  std::printf("outputs written to %s\n", rc.out.string().c_str());
  if (completed == 0) {
    std::fprintf(stderr, "error: no episode completed\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object composition sampling and belief-space grasp planning"};
  app.require_subcommand(1);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample object compositions of a scene");
  sample->add_option("--scene", sa.scene, "Scene JSON file")->required();
  sample->add_option("--seed", sa.seed, "Random seed");
  sample->add_option("--ess-target", sa.ess_target, "Target effective sample size");
  sample->add_option("--h-size", sa.h_size, "Number of retained samples");
  sample->add_option("--n-start", sa.n_start, "Coupled chains started from the past");
  sample->add_option("--t-max", sa.t_max, "Chain length cap");
  sample->add_option("--out", sa.out, "Output file (default: stdout)");
  sample->add_flag("!--no-samples", sa.with_samples, "Omit the sample list");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Write a generated scene with ground truth");
  generate->add_option("--config", ga.config, "Generator config JSON");
  generate->add_option("--seed", ga.seed, "Random seed");
  generate->add_option("--out", ga.out, "Output file (default: stdout)");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run episodes for several methods and compare them");
  run->add_option("--config", ra.config, "Run config JSON");
  run->add_option("--scene", ra.scenes, "Scene JSON files with ground truth");
  run->add_option("--generate", ra.generate, "Number of generated scenes");
  run->add_option("--methods", ra.methods, "best_seg, max_util, pomdp, pomdp_halluc")->delimiter(',');
  run->add_option("--seed", ra.seed, "Top-level seed");
  run->add_option("--horizon", ra.horizon, "Planning horizon");
  run->add_option("--particles", ra.particles, "Particles per planner node");
  run->add_option("--ess-target", ra.ess_target, "Target effective sample size");
  run->add_option("--h-size", ra.h_size, "Retained composition samples");
  run->add_option("--n-start", ra.n_start, "Coupled chains started from the past");
  run->add_option("--t-max", ra.t_max, "Chain length cap");
  run->add_option("--trials", ra.trials, "Episodes per scene and method");
  run->add_option("--task", ra.task, "table_clearing or object_search");
  run->add_flag("--hallucinate", ra.hallucinate, "Also run pomdp_halluc");
  run->add_option("--out", ra.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sample) return cmd_sample(sa);
    if (*generate) return cmd_generate(ga);
    if (*run) return cmd_run(ra);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

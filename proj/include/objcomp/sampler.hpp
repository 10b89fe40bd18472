#pragma once

#include "objcomp/composition.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace objcomp {

struct SamplerConfig {
  int n_ess_target = 200;
  int n_start = 100;
  int h_size = 2000;
  std::int64_t t_max = 131072;
  std::uint64_t seed = 0;
  /// CFTP gives up (throws) once the horizon would exceed this many steps.
  std::int64_t cftp_cap = std::int64_t{1} << 20;

  void validate() const;
};

struct CftpResult {
  EdgeAssignment state;
  std::int64_t horizon = 1;
  /// Number of distinct start states in the initial set.
  std::size_t distinct_starts = 0;
};

struct CompositionSet {
  std::vector<EdgeAssignment> samples;
  bool cftp_collapsed = false;
  std::int64_t cftp_horizon = 0;
  double ess_achieved = 0.0;
  bool truncated = false;
  /// Chain length before pruning.
  std::size_t chain_length = 0;
};

/// Random inputs (edge index, uniform) for absolute time step t of a keyed stream.
struct StepDraw {
  std::size_t edge;
  double u;
};
StepDraw step_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t t, std::size_t edge_count);

/// Start states: all connected, all disconnected, then uniform random assignments.
std::vector<EdgeAssignment> cftp_start_states(std::size_t edge_count, int n_start, std::uint64_t seed);

/// Runs `chains` backwards from time -horizon to 0 with the fixed per-time draws of `seed`.
/// Identical chains are merged after every step.
std::vector<EdgeAssignment> cftp_run_horizon(const CompositionSpace& space, std::vector<EdgeAssignment> chains,
                                             std::int64_t horizon, std::uint64_t seed);

/// Coupling from the past with a dispersed start set. Throws Error("cftp-not-collapsed") past the cap.
CftpResult cftp(const CompositionSpace& space, int n_start, std::uint64_t seed,
                std::int64_t cap = std::int64_t{1} << 20);

/// Continues the chain from `start` for `steps` Gibbs updates, returning every visited state
/// (excluding `start`).
std::vector<EdgeAssignment> run_chain(const CompositionSpace& space, const EdgeAssignment& start, std::size_t steps,
                                      std::uint64_t seed);

CompositionSet sample_compositions(const CompositionSpace& space, const SamplerConfig& config);

/// Initial-positive-sequence ESS of one trace, in [1, L]; a constant trace yields L.
double effective_sample_size(std::span<const double> trace);
/// Minimum ESS over traces (all of equal length >= 2).
double min_ess(const std::vector<std::vector<double>>& traces);
/// Minimum ESS over the indicator traces of every candidate edge.
double min_edge_ess(const std::vector<EdgeAssignment>& samples);

/// `target` indices spread evenly over [0, length), first and last included.
std::vector<std::size_t> even_prune_indices(std::size_t length, std::size_t target);

}  // namespace objcomp

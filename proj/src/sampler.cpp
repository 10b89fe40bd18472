#include "objcomp/sampler.hpp"

#include "objcomp/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace objcomp {

namespace {

constexpr std::uint64_t kCftpStream = 0xC0FFu;
constexpr std::uint64_t kStartStream = 0x57A7u;
constexpr std::uint64_t kChainStream = 0xC4A1u;

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

void merge_duplicates(std::vector<EdgeAssignment>& chains) {
  if (chains.size() < 2) return;
  std::sort(chains.begin(), chains.end());
  chains.erase(std::unique(chains.begin(), chains.end()), chains.end());
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_ess_target <= 0) throw Error("sampler config: n_ess_target must be positive");
  if (n_start < 3) throw Error("sampler config: n_start must be at least 3");
  if (h_size <= 0) throw Error("sampler config: h_size must be positive");
  if (t_max <= 0) throw Error("sampler config: t_max must be positive");
  if (h_size < n_ess_target) throw Error("sampler config: h_size must be at least n_ess_target");
  if (cftp_cap <= 1) throw Error("sampler config: cftp_cap must exceed 1");
}

StepDraw step_draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t t, std::size_t edge_count) {
  const double a = counter_uniform({seed, stream, t, 0});
  const double u = counter_uniform({seed, stream, t, 1});
  auto w = static_cast<std::size_t>(a * static_cast<double>(edge_count));
  if (w >= edge_count) w = edge_count - 1;
  return {w, u};
}

std::vector<EdgeAssignment> cftp_start_states(std::size_t edge_count, int n_start, std::uint64_t seed) {
  std::vector<EdgeAssignment> starts;
  starts.reserve(static_cast<std::size_t>(std::max(n_start, 2)));
  starts.emplace_back(edge_count, true);
  starts.emplace_back(edge_count, false);
  Rng rng = Rng::derived({seed, kStartStream});
  for (int k = 2; k < n_start; ++k) {
    EdgeAssignment a(edge_count);
    for (std::size_t e = 0; e < edge_count; ++e) a.set(e, rng.bernoulli(0.5));
    starts.push_back(std::move(a));
  }
  merge_duplicates(starts);
  return starts;
}

std::vector<EdgeAssignment> cftp_run_horizon(const CompositionSpace& space, std::vector<EdgeAssignment> chains,
                                             std::int64_t horizon, std::uint64_t seed) {
  GibbsKernel kernel(space);
  const std::size_t edges = space.edge_count();
  for (std::int64_t t = horizon; t >= 1; --t) {
    const auto draw = step_draw(seed, kCftpStream, static_cast<std::uint64_t>(t), edges);
    for (auto& c : chains) kernel.step(c, draw.edge, draw.u);
    merge_duplicates(chains);
  }
  return chains;
}

CftpResult cftp(const CompositionSpace& space, int n_start, std::uint64_t seed, std::int64_t cap) {
  if (n_start < 3) throw Error("cftp: n_start must be at least 3");
  const std::size_t edges = space.edge_count();
  if (edges == 0) return {EdgeAssignment(0), 1, 1};
  const auto starts = cftp_start_states(edges, n_start, seed);
  std::int64_t horizon = 1;
  for (;;) {
    horizon *= 2;
    if (horizon > cap) throw Error("cftp-not-collapsed: horizon exceeded " + std::to_string(cap) + " steps");
    auto finals = cftp_run_horizon(space, starts, horizon, seed);
    if (finals.size() == 1) return {std::move(finals.front()), horizon, starts.size()};
  }
}

std::vector<EdgeAssignment> run_chain(const CompositionSpace& space, const EdgeAssignment& start, std::size_t steps,
                                      std::uint64_t seed) {
  std::vector<EdgeAssignment> out;
  out.reserve(steps);
  if (space.edge_count() == 0) {
    out.assign(steps, start);
    return out;
  }
  GibbsKernel kernel(space);
  EdgeAssignment h = start;
  for (std::size_t t = 1; t <= steps; ++t) {
    const auto draw = step_draw(seed, kChainStream, t, space.edge_count());
    kernel.step(h, draw.edge, draw.u);
    out.push_back(h);
  }
  return out;
}

CompositionSet sample_compositions(const CompositionSpace& space, const SamplerConfig& config) {
  config.validate();
  const auto cf = cftp(space, config.n_start, config.seed, config.cftp_cap);

  CompositionSet out;
  out.cftp_collapsed = true;
  out.cftp_horizon = cf.horizon;

  std::vector<EdgeAssignment> chain{cf.state};
  if (space.edge_count() == 0) {
    out.ess_achieved = 1.0;
    out.chain_length = 1;
    out.samples = std::move(chain);
    return out;
  }

  GibbsKernel kernel(space);
  EdgeAssignment h = cf.state;
  std::int64_t t = 1;
  std::int64_t horizon = cf.horizon;
  double ess = 0.0;
  for (;;) {
    ess = chain.size() >= 2 ? min_edge_ess(chain) : 0.0;
    if (ess >= config.n_ess_target || horizon >= config.t_max) break;
    while (t < horizon) {
      const auto draw = step_draw(config.seed, kChainStream, static_cast<std::uint64_t>(t), space.edge_count());
      kernel.step(h, draw.edge, draw.u);
      chain.push_back(h);
      ++t;
    }
    horizon *= 2;
  }
  out.ess_achieved = ess;
  out.truncated = ess < config.n_ess_target;
  out.chain_length = chain.size();

  const auto keep = even_prune_indices(chain.size(), static_cast<std::size_t>(config.h_size));
  out.samples.reserve(keep.size());
  for (auto k : keep) out.samples.push_back(std::move(chain[k]));
  return out;
}

double effective_sample_size(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 2) throw Error("effective_sample_size: trace must have at least 2 entries");
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : trace) var += (x - mean) * (x - mean);
  if (var <= 1e-12 * static_cast<double>(n)) return static_cast<double>(n);

  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> buf(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[i] = trace[i] - mean;
  std::vector<fftw_complex> spec(m / 2 + 1);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(fftw_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.data(), spec.data(), FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec.data(), buf.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  for (auto& c : spec) {
    c[0] = c[0] * c[0] + c[1] * c[1];
    c[1] = 0.0;
  }
  fftw_execute(bwd);
  {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  // buf[k] is now m * sum_i x_i x_{i+k}
  const double c0 = buf[0];
  // initial positive sequence, made monotone
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    const double pair = std::min((buf[k] + buf[k + 1]) / c0, prev);
    if (pair <= 0.0) break;
    sum += pair;
    prev = pair;
  }
  const double tau = -1.0 + 2.0 * sum;
  const double len = static_cast<double>(n);
  if (tau <= 0.0) return len;
  return std::clamp(len / tau, 1.0, len);
}

double min_ess(const std::vector<std::vector<double>>& traces) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t len = 0;
  for (const auto& tr : traces) {
    if (len == 0) len = tr.size();
    if (tr.size() != len) throw Error("min_ess: traces must have equal length");
    best = std::min(best, effective_sample_size(tr));
  }
  return traces.empty() ? 0.0 : best;
}

double min_edge_ess(const std::vector<EdgeAssignment>& samples) {
  if (samples.size() < 2) return 0.0;
  const std::size_t edges = samples.front().size();
  if (edges == 0) return static_cast<double>(samples.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> trace(samples.size());
  for (std::size_t e = 0; e < edges; ++e) {
    for (std::size_t t = 0; t < samples.size(); ++t) trace[t] = samples[t][e] ? 1.0 : 0.0;
    best = std::min(best, effective_sample_size(trace));
  }
  return best;
}

std::vector<std::size_t> even_prune_indices(std::size_t length, std::size_t target) {
  std::vector<std::size_t> idx;
  if (length <= target) {
    idx.resize(length);
    for (std::size_t i = 0; i < length; ++i) idx[i] = i;
    return idx;
  }
  if (target == 0) return idx;
  if (target == 1) return {0};
  idx.reserve(target);
  const std::size_t span = length - 1, gaps = target - 1;
  for (std::size_t k = 0; k < target; ++k) idx.push_back((k * span + gaps / 2) / gaps);
  return idx;
}

}  // namespace objcomp

#include "losp/walk.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "losp/errors.hpp"
#include "losp/parallel.hpp"

namespace losp {

std::vector<Particle> two_particle_start(std::array<double, 2> where) {
  return {Particle{where, Kind::h}, Particle{where, Kind::v}};
}

namespace {

// Appends the children of `parent` to `out`.
void append_children(const Particle& parent, double lambda, SplitMix64& rng, std::vector<Particle>& out) {
  // A v particle spreads along its horizontal line (coordinate 0 varies).
  const int axis = parent.kind == Kind::v ? 0 : 1;
  const Kind child_kind = parent.kind == Kind::v ? Kind::h : Kind::v;
  const double continue_prob = -std::expm1(-lambda);  // next Poisson gap <= 1
  for (const double dir : {1.0, -1.0}) {
    const std::uint64_t count = geometric_failures(rng, continue_prob);
    double offset = 0.0;
    for (std::uint64_t i = 0; i < count; ++i) {
      offset += truncated_exponential(rng, lambda, 1.0);
      Particle child{parent.position, child_kind};
      child.position[axis] += dir * offset;
      out.push_back(child);
    }
  }
}

template <typename OnGeneration>
bool run_walk(const WalkConfig& cfg, SplitMix64& rng, OnGeneration&& on_generation) {
  require(cfg.lambda > 0.0, "brw: lambda must be positive");
  require(cfg.caps.max_generations >= 1 && cfg.caps.max_population >= 1, "brw: caps must be positive");
  if (cfg.restriction) {
    const Box& b = *cfg.restriction;
    require(b.x_lo <= b.x_hi && b.y_lo <= b.y_hi, "brw: restriction box is empty");
  }

  std::vector<Particle> current = cfg.start.empty() ? two_particle_start() : cfg.start;
  if (cfg.restriction) {
    std::erase_if(current, [&](const Particle& p) { return !cfg.restriction->contains(p.position); });
  }
  on_generation(current);
  std::uint64_t generations = 1;
  std::vector<Particle> next;
  while (!current.empty()) {
    if (current.size() >= cfg.caps.max_population || generations >= cfg.caps.max_generations) return true;
    next.clear();
    for (const Particle& p : current) append_children(p, cfg.lambda, rng, next);
    if (cfg.restriction) {
      std::erase_if(next, [&](const Particle& p) { return !cfg.restriction->contains(p.position); });
    }
    current.swap(next);
    if (!current.empty()) {
      on_generation(current);
      ++generations;
    }
  }
  return false;
}

}  // namespace

std::vector<Particle> brw_children(const Particle& parent, double lambda, SplitMix64& rng) {
  require(lambda > 0.0, "brw_children: lambda must be positive");
  std::vector<Particle> out;
  append_children(parent, lambda, rng, out);
  return out;
}

WalkRun brw_simulate(const WalkConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  WalkRun run;
  run.survived_to_cap = run_walk(cfg, rng, [&](const std::vector<Particle>& g) { run.generations.push_back(g); });
  return run;
}

WalkSurvival brw_survival(const WalkConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  WalkSurvival out;
  out.survived_to_cap =
      run_walk(cfg, rng, [&](const std::vector<Particle>& g) { out.generation_sizes.push_back(g.size()); });
  return out;
}

MeanEstimate brw_survival_frequency(const WalkConfig& cfg, std::uint64_t reps, std::uint64_t seed,
                                    unsigned threads) {
  require(reps >= 1, "brw: reps must be positive");
  auto partials = reduce_reps<std::uint64_t>(
      reps,
      [&](std::uint64_t& survived, std::uint64_t rep) {
        survived += brw_survival(cfg, substream(seed, rep)).survived_to_cap ? 1 : 0;
      },
      threads, 64);
  std::uint64_t survived = 0;
  for (auto s : partials) survived += s;
  return proportion(survived, reps);
}

MeanEstimate restricted_survival(double lambda, double side, std::uint64_t reps, std::uint64_t seed,
                                 WalkCaps caps, unsigned threads) {
  require(side > 0.0, "restricted_survival: side must be positive");
  require(reps >= 1, "restricted_survival: reps must be positive");
  auto partials = reduce_reps<std::uint64_t>(
      reps,
      [&](std::uint64_t& survived, std::uint64_t rep) {
        SplitMix64 placement(hash2(seed, rep) ^ 0x5bd1e995ULL);
        const std::array<double, 2> where{placement.uniform() * side, placement.uniform() * side};
        WalkConfig cfg;
        cfg.lambda = lambda;
        cfg.start = two_particle_start(where);
        cfg.restriction = Box::square(side);
        cfg.caps = caps;
        survived += brw_survival(cfg, substream(seed, rep)).survived_to_cap ? 1 : 0;
      },
      threads, 64);
  std::uint64_t survived = 0;
  for (auto s : partials) survived += s;
  return proportion(survived, reps);
}

std::uint64_t torus_reach_once(double lambda, double circumference, SplitMix64& rng,
                               std::uint64_t* points_drawn) {
  require(lambda >= 0.0, "torus_reach: lambda must be nonnegative");
  require(circumference > 0.0, "torus_reach: circumference must be positive");
  const double mean = lambda * circumference;
  std::uint64_t count = 0;
  if (mean > 0.0) count = static_cast<std::uint64_t>(std::poisson_distribution<std::int64_t>(mean)(rng));
  if (points_drawn) *points_drawn = count;
  if (count == 0) return 0;

  std::vector<double> pts(count);
  for (auto& x : pts) x = rng.uniform() * circumference;
  std::sort(pts.begin(), pts.end());

  // Clockwise from 0 until the first gap > 1 ...
  std::uint64_t forward = 0;
  double prev = 0.0;
  for (double x : pts) {
    if (x - prev > 1.0) break;
    ++forward;
    prev = x;
  }
  if (forward == count) return count;
  // ... and anticlockwise, which cannot cross that gap.
  std::uint64_t backward = 0;
  prev = circumference;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    if (prev - *it > 1.0) break;
    ++backward;
    prev = *it;
  }
  return std::min(count, forward + backward);
}

ReachSample torus_reach_Z(double lambda, double circumference, std::uint64_t reps, std::uint64_t seed,
                          unsigned threads) {
  require(reps >= 1, "torus_reach_Z: reps must be positive");
  ReachSample sample;
  sample.values.resize(reps);
  constexpr std::uint64_t kChunk = 4096;
  parallel_for(
      (reps + kChunk - 1) / kChunk,
      [&](std::size_t c) {
        for (std::uint64_t rep = c * kChunk; rep < std::min<std::uint64_t>(reps, (c + 1) * kChunk); ++rep) {
          SplitMix64 rng(substream(seed, rep));
          sample.values[rep] = torus_reach_once(lambda, circumference, rng);
        }
      },
      threads);
  RunningStats stats;
  for (auto v : sample.values) stats.add(static_cast<double>(v));
  sample.mean = stats.estimate();
  return sample;
}

}  // namespace losp

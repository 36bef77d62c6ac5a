#pragma once

// Spatial branching random walk in the plane and the circle reach count.
//
// A particle of kind v at (x, y) places children on the horizontal line
// through it: walking outwards in each direction it keeps the points of a
// rate-lambda Poisson process until the first gap longer than 1. Its children
// have kind h and place their own children on vertical lines, and so on.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "losp/random.hpp"
#include "losp/stats.hpp"

namespace losp {

enum class Kind : std::uint8_t { h, v };

struct Particle {
  std::array<double, 2> position{0.0, 0.0};
  Kind kind = Kind::h;
};

/// Closed axis-aligned rectangle.
struct Box {
  double x_lo, x_hi, y_lo, y_hi;

  bool contains(const std::array<double, 2>& p) const {
    return p[0] >= x_lo && p[0] <= x_hi && p[1] >= y_lo && p[1] <= y_hi;
  }
  static Box centered(double half_width) { return {-half_width, half_width, -half_width, half_width}; }
  static Box square(double side) { return {0.0, side, 0.0, side}; }
};

struct WalkCaps {
  std::uint64_t max_generations = 1'000;
  std::uint64_t max_population = 100'000;
};

struct WalkConfig {
  double lambda = 1.0;
  std::vector<Particle> start;     // empty means the two-particle start at the origin
  std::optional<Box> restriction;  // particles outside are deleted with their subtrees
  WalkCaps caps;
};

/// One particle of each kind at `where`.
std::vector<Particle> two_particle_start(std::array<double, 2> where = {0.0, 0.0});

/// Children of one particle; their count is distributed as Gamma_lambda^(2).
std::vector<Particle> brw_children(const Particle& parent, double lambda, SplitMix64& rng);

struct WalkRun {
  std::vector<std::vector<Particle>> generations;  // generation 0 is the start
  bool survived_to_cap = false;  // a generation reached max_population, or the
                                 // generation cap was hit with particles alive
};

WalkRun brw_simulate(const WalkConfig& cfg, std::uint64_t seed);

/// Generation sizes only; same randomness as brw_simulate.
struct WalkSurvival {
  std::vector<std::uint64_t> generation_sizes;
  bool survived_to_cap = false;
};
WalkSurvival brw_survival(const WalkConfig& cfg, std::uint64_t seed);

/// Fraction of runs surviving to a cap.
MeanEstimate brw_survival_frequency(const WalkConfig& cfg, std::uint64_t reps, std::uint64_t seed,
                                    unsigned threads = 0);

/// Survival of the walk restricted to [0,C]^2 started from one particle of
/// each kind at a uniform random point of the square.
MeanEstimate restricted_survival(double lambda, double side, std::uint64_t reps, std::uint64_t seed,
                                 WalkCaps caps = {}, unsigned threads = 0);

/// Number of points of a rate-lambda Poisson process on the circle of the
/// given circumference reachable from an added point 0 by hops of length <= 1.
std::uint64_t torus_reach_once(double lambda, double circumference, SplitMix64& rng,
                               std::uint64_t* points_drawn = nullptr);

struct ReachSample {
  std::vector<std::uint64_t> values;
  MeanEstimate mean;
};

ReachSample torus_reach_Z(double lambda, double circumference, std::uint64_t reps, std::uint64_t seed,
                          unsigned threads = 0);

}  // namespace losp

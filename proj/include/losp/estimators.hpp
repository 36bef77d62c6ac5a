#pragma once

// Finite-size estimators over the lattice models: the crossing-probability
// point p_c, the large-component probability theta, giant-component
// fractions, and origin-component statistics on a wide torus.

#include <cstdint>
#include <string>
#include <vector>

#include "losp/lattice.hpp"
#include "losp/stats.hpp"

namespace losp {

/// One row of every results file.
struct EstimateRecord {
  std::string model;  // site | bond | ddim
  int d = 2;
  int r = 1;
  Coord omega = 1;
  Coord n = 1;
  double lambda = 0.0;  // 0 when not applicable
  double p = 0.0;       // site or bond density used (0 for pc rows)
  std::string estimator;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
};

enum class PercolationModel { site, bond };

/// Crossing point of the grid window [n]^d. With common random numbers the
/// crossing event is monotone in p, so each replication has a threshold
/// p*_i (located by bisection) and the crossing frequency at p is the share
/// of thresholds <= p. The estimate is their median; the CI is the binomial
/// order-statistic interval, i.e. the binomial error mapped through the
/// empirical crossing curve. Bond runs need d = 2, r = 1.
EstimateRecord estimate_pc(PercolationModel model, Coord omega, Coord n, int d, int r, std::uint64_t reps,
                           std::uint64_t seed, unsigned threads = 0);

/// Per-replication crossing thresholds behind estimate_pc, in replication order.
std::vector<double> crossing_thresholds(PercolationModel model, Coord omega, Coord n, int d, int r,
                                        std::uint64_t reps, std::uint64_t seed, unsigned threads = 0);

/// Crossing frequency at a fixed density, from the same samples.
MeanEstimate crossing_frequency(PercolationModel model, Coord omega, Coord n, int d, int r, double p,
                                std::uint64_t reps, std::uint64_t seed, unsigned threads = 0);

inline constexpr Coord kDefaultWindow = 100;

struct ThetaEstimate {
  EstimateRecord raw;         // P(origin occupied and |C_0| >= K)
  MeanEstimate normalized;    // raw * omega / lambda
};

/// theta proxy on the torus of side window * omega at p = lambda / omega.
ThetaEstimate estimate_theta(Coord omega, double lambda, std::uint64_t K, std::uint64_t reps,
                             std::uint64_t seed, Coord window = kDefaultWindow, unsigned threads = 0);

struct GiantSample {
  std::vector<std::uint64_t> c1;        // per replication
  std::vector<std::uint64_t> vertices;  // |V| per replication
};

/// Largest components on the n x n torus: site model at p = lambda / omega,
/// or bond model (all n^2 sites) with edge density lambda / omega.
GiantSample giant_sample(PercolationModel model, Coord omega, Coord n, double lambda, std::uint64_t reps,
                         std::uint64_t seed, unsigned threads = 0);

/// Mean of C_1 / |V| over replications.
EstimateRecord estimate_giant(PercolationModel model, Coord omega, Coord n, double lambda,
                              std::uint64_t reps, std::uint64_t seed, unsigned threads = 0);

struct OriginStatistics {
  std::vector<MeanEstimate> tail;  // tail[k-1] = P(|C_0| >= k | origin occupied), k = 1..k_max
  MeanEstimate first_generation;   // mean |Y_1|
  double mu = 0.0;                 // -omega log(1 - p)
};

/// Conditioned-origin statistics on the torus of side window * omega.
OriginStatistics origin_statistics(Coord omega, double lambda, std::uint64_t k_max, std::uint64_t reps,
                                   std::uint64_t seed, Coord window = kDefaultWindow, unsigned threads = 0);

}  // namespace losp

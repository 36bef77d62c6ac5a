#pragma once

// Geometric-offspring branching processes.
//
// Gamma_mu is geometric on {0,1,...} with P(k) = (1 - e^-mu)^k e^-mu, and
// Gamma_mu^(r) is the sum of r independent copies. The site-model process
// gives its root Gamma_mu^(4) children and every later particle Gamma_mu^(2).

#include <cstdint>
#include <vector>

#include "losp/stats.hpp"

namespace losp {

struct OffspringLaw {
  double mu = 1.0;
  int arity = 1;

  /// Mean of Gamma_mu^(arity), arity (e^mu - 1).
  double mean() const;
};

/// Negative binomial pmf C(k+r-1, k) (1-e^-mu)^k e^-(r mu).
double offspring_pmf(const OffspringLaw& law, std::uint64_t k);

struct BranchingSpec {
  double mu = 1.0;
  int root_arity = 4;
  int inner_arity = 2;
};

struct BranchingCaps {
  std::uint64_t max_total = 100'000;
  std::uint64_t max_generations = 10'000;
};

struct BranchingRun {
  std::uint64_t total_progeny = 0;  // including the root
  std::vector<std::uint64_t> generation_sizes;
  bool survived_to_cap = false;  // a cap was hit with particles alive
};

/// Exact forward simulation, one negative binomial draw per generation.
BranchingRun simulate_bp(const BranchingSpec& spec, std::uint64_t seed, BranchingCaps caps = {});

/// Survival probability of the site-model process (root arity 4, inner 2).
double phi(double mu);

/// Extinction probability q of a single inner particle, i.e. the minimal
/// fixed point of q = g(q)^2 with g the Gamma_mu generating function.
double inner_extinction(double mu);

/// Gamma_mu generating function e^-mu / (1 - (1 - e^-mu) s).
double offspring_pgf(double mu, double s);

/// Maximal solution of x = 1 - exp(-mu x) in [0,1]: survival of a Poisson(mu)
/// Galton-Watson process.
double phi_bar(double mu);

/// Monte Carlo estimate of P(total progeny >= k).
MeanEstimate progeny_tail(const BranchingSpec& spec, std::uint64_t k, std::uint64_t reps,
                          std::uint64_t seed, unsigned threads = 0);

/// P(total progeny >= k) for every k in [1, k_max] from one set of runs.
std::vector<MeanEstimate> progeny_tail_curve(const BranchingSpec& spec, std::uint64_t k_max,
                                             std::uint64_t reps, std::uint64_t seed,
                                             unsigned threads = 0);

/// Fraction of runs hitting the cap with particles alive.
MeanEstimate survival_frequency(const BranchingSpec& spec, std::uint64_t reps, std::uint64_t seed,
                                BranchingCaps caps = {}, unsigned threads = 0);

}  // namespace losp

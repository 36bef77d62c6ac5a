#include "losp/branching.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "losp/errors.hpp"
#include "losp/parallel.hpp"
#include "losp/random.hpp"

namespace losp {

double OffspringLaw::mean() const { return arity * std::expm1(mu); }

double offspring_pmf(const OffspringLaw& law, std::uint64_t k) {
  require(law.mu > 0.0, "offspring_pmf: mu must be positive");
  require(law.arity >= 1, "offspring_pmf: arity must be positive");
  const double r = law.arity;
  const double kk = static_cast<double>(k);
  const double log_fail = std::log(-std::expm1(-law.mu));  // log(1 - e^-mu)
  const double log_binom = std::lgamma(kk + r) - std::lgamma(kk + 1.0) - std::lgamma(r);
  return std::exp(log_binom + kk * log_fail - r * law.mu);
}

double offspring_pgf(double mu, double s) {
  const double a = std::exp(-mu);
  return a / (1.0 - (1.0 - a) * s);
}

double inner_extinction(double mu) {
  require(mu > 0.0, "phi: mu must be positive");
  // q = g(q)^2 is the cubic q (1 - b q)^2 = a^2 (a = e^-mu, b = 1 - a), which
  // has the root q = 1; the other two solve b^2 q^2 + (b^2 - 2b) q + a^2 = 0.
  // The smaller one, written without cancellation, is the minimal fixed point
  // whenever it lies below 1 (supercritical case).
  const double a = std::exp(-mu);
  const double b = -std::expm1(-mu);
  const double q = 2.0 * a * a / (b * (1.0 + a + std::sqrt(b * (1.0 + 3.0 * a))));
  return std::min(1.0, q);
}

double phi(double mu) {
  const double q = inner_extinction(mu);
  // Root extinction is g(q)^4 = q^2.
  return std::max(0.0, (1.0 - q) * (1.0 + q));
}

double phi_bar(double mu) {
  require(mu > 0.0, "phi_bar: mu must be positive");
  if (mu <= 1.0) return 0.0;
  double x = 1.0;
  for (int it = 0; it < 1'000'000; ++it) {
    const double next = -std::expm1(-mu * x);
    if (std::abs(next - x) < 1e-15) return next;
    x = next;
  }
  // Close to mu = 1 the iteration crawls; finish by bisection on [0, x],
  // where 1 - e^(-mu t) - t is positive below the root and negative above.
  double lo = 0.0, hi = x;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (-std::expm1(-mu * mid) - mid > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

std::uint64_t draw_children(SplitMix64& rng, double mu, std::uint64_t copies) {
  if (copies == 0) return 0;
  // Sum of `copies` geometric counts = failures before `copies` successes.
  std::negative_binomial_distribution<std::int64_t> nb(static_cast<std::int64_t>(copies), std::exp(-mu));
  return static_cast<std::uint64_t>(nb(rng));
}

}  // namespace

BranchingRun simulate_bp(const BranchingSpec& spec, std::uint64_t seed, BranchingCaps caps) {
  require(spec.mu > 0.0, "simulate_bp: mu must be positive");
  require(spec.root_arity >= 1 && spec.inner_arity >= 1, "simulate_bp: arities must be positive");
  require(caps.max_total >= 1 && caps.max_generations >= 1, "simulate_bp: caps must be positive");
  SplitMix64 rng(seed);
  BranchingRun run;
  run.generation_sizes.push_back(1);
  run.total_progeny = 1;
  std::uint64_t alive = 1;
  bool root = true;
  while (alive > 0) {
    if (run.total_progeny >= caps.max_total || run.generation_sizes.size() >= caps.max_generations) {
      run.survived_to_cap = true;
      break;
    }
    const std::uint64_t arity = root ? spec.root_arity : spec.inner_arity;
    alive = draw_children(rng, spec.mu, arity * alive);
    root = false;
    run.total_progeny += alive;
    if (alive > 0) run.generation_sizes.push_back(alive);
  }
  return run;
}

std::vector<MeanEstimate> progeny_tail_curve(const BranchingSpec& spec, std::uint64_t k_max,
                                             std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  require(k_max >= 1, "progeny_tail: k must be >= 1");
  require(reps >= 1, "progeny_tail: reps must be positive");
  const BranchingCaps caps{k_max, std::uint64_t{1} << 62};
  // counts[k] = runs with total >= k
  auto partials = reduce_reps<std::vector<std::uint64_t>>(
      reps,
      [&](std::vector<std::uint64_t>& counts, std::uint64_t rep) {
        if (counts.empty()) counts.assign(k_max + 1, 0);
        const auto run = simulate_bp(spec, substream(seed, rep), caps);
        const std::uint64_t top = std::min(run.total_progeny, k_max);
        for (std::uint64_t k = 1; k <= top; ++k) ++counts[k];
      },
      threads, 4096);
  std::vector<std::uint64_t> counts(k_max + 1, 0);
  for (const auto& part : partials)
    for (std::size_t k = 0; k < part.size(); ++k) counts[k] += part[k];
  std::vector<MeanEstimate> curve;
  curve.reserve(k_max);
  for (std::uint64_t k = 1; k <= k_max; ++k) curve.push_back(proportion(counts[k], reps));
  return curve;
}

MeanEstimate progeny_tail(const BranchingSpec& spec, std::uint64_t k, std::uint64_t reps,
                          std::uint64_t seed, unsigned threads) {
  require(k >= 1, "progeny_tail: k must be >= 1");
  if (k == 1) return MeanEstimate{1.0, 0.0, reps};
  return progeny_tail_curve(spec, k, reps, seed, threads).back();
}

MeanEstimate survival_frequency(const BranchingSpec& spec, std::uint64_t reps, std::uint64_t seed,
                                BranchingCaps caps, unsigned threads) {
  require(reps >= 1, "survival_frequency: reps must be positive");
  auto partials = reduce_reps<std::uint64_t>(
      reps,
      [&](std::uint64_t& survived, std::uint64_t rep) {
        survived += simulate_bp(spec, substream(seed, rep), caps).survived_to_cap ? 1 : 0;
      },
      threads, 4096);
  std::uint64_t survived = 0;
  for (auto s : partials) survived += s;
  return proportion(survived, reps);
}

}  // namespace losp

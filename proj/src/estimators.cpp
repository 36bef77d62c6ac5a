#include "losp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "losp/errors.hpp"
#include "losp/parallel.hpp"
#include "losp/random.hpp"

namespace losp {

namespace {

LatticeSpec window_spec(int d, int r, Coord omega, Coord n, Topology topology, double p) {
  LatticeSpec spec;
  spec.d = d;
  spec.r = r;
  spec.omega = omega;
  spec.n = n;
  spec.topology = topology;
  spec.p = p;
  spec.validate();
  return spec;
}

bool any_crossing(const ComponentLabeling& lab) {
  return std::any_of(lab.crossing.begin(), lab.crossing.end(), [](bool b) { return b; });
}

double omega_power(Coord omega, int r) { return std::pow(static_cast<double>(omega), r); }

// Smallest mark at which the site configuration of one replication crosses.
double site_threshold(const LatticeSpec& spec, std::uint64_t seed) {
  const LatticeGeometry geo(spec);
  const Strategy strategy = spec.r == 1 ? Strategy::line_sweep : Strategy::spatial_hash;
  double p_hi = std::min(1.0, 1.2 / omega_power(spec.omega, spec.r));

  struct Mark {
    SiteIndex site;
    double u;
  };
  std::vector<Mark> candidates;
  std::vector<SiteIndex> sites;
  auto crosses_at = [&](double t) {
    sites.clear();
    for (const Mark& m : candidates)
      if (m.u <= t) sites.push_back(m.site);
    const auto occ = occupied_from_sites(spec, sites);
    return any_crossing(components(occ, spec, strategy));
  };

  for (;;) {
    candidates.clear();
    for (SiteIndex s = 0; s < geo.num_sites(); ++s) {
      const double u = site_uniform(seed, s);
      if (u < p_hi) candidates.push_back({s, u});
    }
    if (!candidates.empty() && crosses_at(p_hi)) break;
    if (p_hi >= 1.0) return 1.0;
    p_hi = std::min(1.0, 2.0 * p_hi);
  }

  std::vector<double> marks;
  marks.reserve(candidates.size());
  for (const Mark& m : candidates) marks.push_back(m.u);
  std::sort(marks.begin(), marks.end());
  // Crossing is monotone in the mark level, so binary search the first one.
  std::size_t lo = 0, hi = marks.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (crosses_at(marks[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return marks[lo];
}

double bond_threshold(const LatticeSpec& spec, std::uint64_t seed) {
  double p_hi = std::min(1.0, 0.75 / static_cast<double>(spec.omega));
  std::vector<BondEdge> edges;
  for (;;) {
    edges = sample_bond_edges(spec, p_hi, seed);
    if (!edges.empty() && any_crossing(bond_labeling(spec, edges, p_hi, p_hi))) break;
    if (p_hi >= 1.0) return 1.0;
    p_hi = std::min(1.0, 2.0 * p_hi);
  }
  std::vector<double> levels;
  levels.reserve(edges.size());
  for (const BondEdge& e : edges) levels.push_back(e.mark * p_hi);
  std::sort(levels.begin(), levels.end());
  // Edge e is open at q iff its level < q.
  auto crosses_at = [&](double level) {
    const double q = std::min(p_hi, std::nextafter(level, 2.0));
    return any_crossing(bond_labeling(spec, edges, p_hi, q));
  };
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (crosses_at(levels[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return levels[lo];
}

void check_pc_args(PercolationModel model, Coord omega, Coord n, int d, int r, std::uint64_t reps) {
  require(omega >= 1, "pc: omega must be positive");
  require(n >= 8 * omega, "pc: need n >= 8 omega");
  require(reps >= 1, "pc: reps must be positive");
  if (model == PercolationModel::bond) require(d == 2 && r == 1, "pc: the bond model needs d = 2, r = 1");
}

}  // namespace

std::vector<double> crossing_thresholds(PercolationModel model, Coord omega, Coord n, int d, int r,
                                        std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  check_pc_args(model, omega, n, d, r, reps);
  const LatticeSpec spec = window_spec(d, r, omega, n, Topology::grid, 0.0);
  std::vector<double> thresholds(reps);
  parallel_for(
      reps,
      [&](std::size_t rep) {
        const std::uint64_t s = substream(seed, rep);
        thresholds[rep] = model == PercolationModel::site ? site_threshold(spec, s) : bond_threshold(spec, s);
      },
      threads);
  return thresholds;
}

MeanEstimate crossing_frequency(PercolationModel model, Coord omega, Coord n, int d, int r, double p,
                                std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  check_pc_args(model, omega, n, d, r, reps);
  require(p >= 0.0 && p <= 1.0, "pc: p must lie in [0,1]");
  const LatticeSpec spec = window_spec(d, r, omega, n, Topology::grid, p);
  const Strategy strategy = r == 1 ? Strategy::line_sweep : Strategy::spatial_hash;
  std::vector<std::uint8_t> hit(reps);
  parallel_for(
      reps,
      [&](std::size_t rep) {
        const std::uint64_t s = substream(seed, rep);
        if (model == PercolationModel::site)
          hit[rep] = any_crossing(components(sample_occupied(spec, s), spec, strategy));
        else
          hit[rep] = any_crossing(bond_components(spec, p, s));
      },
      threads);
  std::uint64_t total = 0;
  for (auto h : hit) total += h;
  return proportion(total, reps);
}

EstimateRecord estimate_pc(PercolationModel model, Coord omega, Coord n, int d, int r, std::uint64_t reps,
                           std::uint64_t seed, unsigned threads) {
  require(reps >= 2, "pc: need at least 2 replications");
  auto t = crossing_thresholds(model, omega, n, d, r, reps, seed, threads);
  std::sort(t.begin(), t.end());
  const double count = static_cast<double>(reps);
  auto at_rank = [&](double rank) {
    const auto i = static_cast<std::int64_t>(std::clamp(rank, 0.0, count - 1.0));
    return t[static_cast<std::size_t>(i)];
  };
  EstimateRecord rec;
  rec.model = model == PercolationModel::site ? (d == 2 && r == 1 ? "site" : "ddim") : "bond";
  rec.d = d;
  rec.r = r;
  rec.omega = omega;
  rec.n = n;
  rec.estimator = "pc";
  rec.estimate = reps % 2 ? t[reps / 2] : 0.5 * (t[reps / 2 - 1] + t[reps / 2]);
  const double half = 1.96 * std::sqrt(count) / 2.0;
  rec.ci_low = std::min(rec.estimate, at_rank(std::floor(count / 2.0 - half) - 1.0));
  rec.ci_high = std::max(rec.estimate, at_rank(std::ceil(count / 2.0 + half)));
  rec.std_error = (rec.ci_high - rec.ci_low) / (2.0 * 1.96);
  rec.reps = reps;
  rec.seed = seed;
  return rec;
}

ThetaEstimate estimate_theta(Coord omega, double lambda, std::uint64_t K, std::uint64_t reps, std::uint64_t seed,
                             Coord window, unsigned threads) {
  require(window >= kDefaultWindow, "theta: the torus window must be at least 100 omega");
  require(K >= 1, "theta: K must be positive");
  require(reps >= 1, "theta: reps must be positive");
  require(lambda > 0.0 && lambda <= static_cast<double>(omega), "theta: need 0 < lambda <= omega");
  const double p = lambda / static_cast<double>(omega);
  const LatticeSpec spec = window_spec(2, 1, omega, window * omega, Topology::torus, p);
  ExplorationCaps caps;
  caps.max_population = K;
  auto parts = reduce_reps<std::uint64_t>(
      reps,
      [&](std::uint64_t& big, std::uint64_t rep) {
        if (K == 1) {
          ++big;
          return;
        }
        big += explore_conditioned(spec, substream(seed, rep), 0, caps).total() >= K ? 1 : 0;
      },
      threads, 64);
  std::uint64_t big = 0;
  for (auto b : parts) big += b;
  const MeanEstimate frac = proportion(big, reps);

  ThetaEstimate out;
  EstimateRecord& rec = out.raw;
  rec.model = "site";
  rec.omega = omega;
  rec.n = spec.n;
  rec.lambda = lambda;
  rec.p = p;
  rec.estimator = "theta";
  rec.estimate = p * frac.mean;
  rec.std_error = p * frac.std_error;
  rec.ci_low = std::max(0.0, rec.estimate - 1.96 * rec.std_error);
  rec.ci_high = rec.estimate + 1.96 * rec.std_error;
  rec.reps = reps;
  rec.seed = seed;
  const double scale = static_cast<double>(omega) / lambda;
  out.normalized = {rec.estimate * scale, rec.std_error * scale, reps};
  return out;
}

GiantSample giant_sample(PercolationModel model, Coord omega, Coord n, double lambda, std::uint64_t reps,
                         std::uint64_t seed, unsigned threads) {
  require(reps >= 1, "giant: reps must be positive");
  require(lambda > 0.0 && lambda <= static_cast<double>(omega), "giant: need 0 < lambda <= omega");
  const double p = lambda / static_cast<double>(omega);
  const LatticeSpec spec = window_spec(2, 1, omega, n, Topology::torus, p);
  GiantSample out;
  out.c1.resize(reps);
  out.vertices.resize(reps);
  parallel_for(
      reps,
      [&](std::size_t rep) {
        const std::uint64_t s = substream(seed, rep);
        if (model == PercolationModel::site) {
          const auto occ = sample_occupied(spec, s);
          out.c1[rep] = components(occ, spec, Strategy::line_sweep).c1;
          out.vertices[rep] = occ.size();
        } else {
          out.c1[rep] = bond_components(spec, p, s).c1;
          out.vertices[rep] = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
        }
      },
      threads);
  return out;
}

EstimateRecord estimate_giant(PercolationModel model, Coord omega, Coord n, double lambda, std::uint64_t reps,
                              std::uint64_t seed, unsigned threads) {
  const auto sample = giant_sample(model, omega, n, lambda, reps, seed, threads);
  RunningStats stats;
  for (std::uint64_t i = 0; i < reps; ++i)
    stats.add(sample.vertices[i] ? static_cast<double>(sample.c1[i]) / static_cast<double>(sample.vertices[i])
                                 : 0.0);
  const auto est = stats.estimate();
  EstimateRecord rec;
  rec.model = model == PercolationModel::site ? "site" : "bond";
  rec.omega = omega;
  rec.n = n;
  rec.lambda = lambda;
  rec.p = lambda / static_cast<double>(omega);
  rec.estimator = "giant";
  rec.estimate = est.mean;
  rec.std_error = est.std_error;
  rec.ci_low = est.mean - 1.96 * est.std_error;
  rec.ci_high = est.mean + 1.96 * est.std_error;
  rec.reps = reps;
  rec.seed = seed;
  return rec;
}

OriginStatistics origin_statistics(Coord omega, double lambda, std::uint64_t k_max, std::uint64_t reps,
                                   std::uint64_t seed, Coord window, unsigned threads) {
  require(window >= kDefaultWindow, "origin_statistics: the torus window must be at least 100 omega");
  require(k_max >= 2, "origin_statistics: k_max must be >= 2");
  require(reps >= 2, "origin_statistics: need at least 2 replications");
  require(lambda > 0.0 && lambda <= static_cast<double>(omega), "origin_statistics: need 0 < lambda <= omega");
  const double p = lambda / static_cast<double>(omega);
  const LatticeSpec spec = window_spec(2, 1, omega, window * omega, Topology::torus, p);

  ExplorationCaps tail_caps;
  tail_caps.max_population = k_max;
  ExplorationCaps first_caps;
  first_caps.max_generations = 2;

  struct Partial {
    std::vector<std::uint64_t> at_least;
    RunningStats y1;
  };
  auto parts = reduce_reps<Partial>(
      reps,
      [&](Partial& part, std::uint64_t rep) {
        if (part.at_least.empty()) part.at_least.assign(k_max, 0);
        const std::uint64_t s = substream(seed, rep);
        const std::uint64_t total = std::min(k_max, explore_conditioned(spec, s, 0, tail_caps).total());
        for (std::uint64_t k = 0; k < total; ++k) ++part.at_least[k];
        const auto first = explore_conditioned(spec, s, 0, first_caps);
        part.y1.add(first.generations.size() > 1 ? static_cast<double>(first.generations[1].size()) : 0.0);
      },
      threads, 1024);

  std::vector<std::uint64_t> at_least(k_max, 0);
  RunningStats y1;
  for (const auto& part : parts) {
    for (std::uint64_t k = 0; k < part.at_least.size(); ++k) at_least[k] += part.at_least[k];
    y1.merge(part.y1);
  }
  OriginStatistics out;
  out.tail.reserve(k_max);
  for (auto c : at_least) out.tail.push_back(proportion(c, reps));
  out.first_generation = y1.estimate();
  out.mu = -static_cast<double>(omega) * std::log1p(-p);
  return out;
}

}  // namespace losp

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "losp/branching.hpp"
#include "losp/errors.hpp"
#include "losp/estimators.hpp"
#include "losp/lattice.hpp"
#include "losp/random.hpp"
#include "losp/stats.hpp"

using namespace losp;

namespace {

LatticeSpec make_spec(int d, int r, Coord omega, Coord n, Topology t, double p) {
  LatticeSpec s;
  s.d = d;
  s.r = r;
  s.omega = omega;
  s.n = n;
  s.topology = t;
  s.p = p;
  return s;
}

SiteIndex site2(const LatticeSpec& spec, Coord x, Coord y) {
  const Coord c[2] = {x, y};
  return LatticeGeometry(spec).index(c);
}

// All-pairs adjacency BFS, labelled by smallest member index.
std::vector<std::uint32_t> brute_force_roots(const OccupiedSet& occ, const LatticeSpec& spec) {
  const LatticeGeometry geo(spec);
  const std::size_t m = occ.size();
  auto adjacent = [&](SiteIndex a, SiteIndex b) {
    int differing = 0;
    for (int ax = 0; ax < spec.d; ++ax) {
      const Coord ca = geo.coord(a, ax), cb = geo.coord(b, ax);
      Coord dist = std::abs(ca - cb);
      if (spec.topology == Topology::torus) dist = std::min(dist, spec.n - dist);
      if (dist == 0) continue;
      if (dist > spec.omega) return false;
      ++differing;
    }
    return differing >= 1 && differing <= spec.r;
  };
  std::vector<std::uint32_t> root(m, UINT32_MAX);
  for (std::uint32_t s = 0; s < m; ++s) {
    if (root[s] != UINT32_MAX) continue;
    std::vector<std::uint32_t> stack{s};
    root[s] = s;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (std::uint32_t w = 0; w < m; ++w) {
        if (root[w] == UINT32_MAX && adjacent(occ.sites[v], occ.sites[w])) {
          root[w] = s;
          stack.push_back(w);
        }
      }
    }
  }
  return root;
}

std::set<SiteIndex> component_of(const OccupiedSet& occ, const ComponentLabeling& lab, SiteIndex origin) {
  const auto i = *occ.find(origin);
  std::set<SiteIndex> out;
  for (std::uint32_t j = 0; j < occ.size(); ++j)
    if (lab.root[j] == lab.root[i]) out.insert(occ.sites[j]);
  return out;
}

}  // namespace

TEST_CASE("sample_occupied: extreme densities") {
  auto spec = make_spec(2, 1, 2, 4, Topology::grid, 0.0);
  CHECK(sample_occupied(spec, 7).empty());
  spec.p = 1.0;
  const auto occ = sample_occupied(spec, 7);
  CHECK(occ.size() == 16);
}

TEST_CASE("sample_occupied: binomial mean at p = 1/2") {
  const auto spec = make_spec(2, 1, 4, 64, Topology::grid, 0.5);
  RunningStats counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) counts.add(static_cast<double>(sample_occupied(spec, seed).size()));
  CHECK(std::abs(counts.estimate().z_score(2048.0)) < 3.0);
}

TEST_CASE("sample_occupied: line index invariants and determinism") {
  const auto spec = make_spec(3, 2, 3, 12, Topology::torus, 0.2);
  const auto a = sample_occupied(spec, 99);
  const auto b = sample_occupied(spec, 99);
  CHECK(a.sites == b.sites);
  REQUIRE(a.lines.size() == 3);
  std::size_t pairs = 0;
  for (const auto& li : a.lines) {
    pairs += li.member.size();
    for (std::size_t l = 0; l + 1 < li.offsets.size(); ++l)
      for (auto k = li.offsets[l]; k + 1 < li.offsets[l + 1]; ++k) CHECK(li.position[k] < li.position[k + 1]);
  }
  CHECK(pairs == 3 * a.size());
}

TEST_CASE("sample_occupied: invalid input") {
  CHECK_THROWS_AS(sample_occupied(make_spec(2, 1, 2, 8, Topology::grid, 1.5), 1), PreconditionError);
  CHECK_THROWS_AS(sample_occupied(make_spec(2, 1, 9, 8, Topology::grid, 0.5), 1), PreconditionError);
  CHECK_THROWS_AS(sample_occupied(make_spec(8, 1, 2, 1'000'000, Topology::grid, 0.5), 1), CapacityError);
}

TEST_CASE("components: small examples") {
  const auto spec = make_spec(2, 1, 2, 8, Topology::grid, 0.0);
  {
    const auto occ = occupied_from_sites(spec, {site2(spec, 1, 1), site2(spec, 1, 3), site2(spec, 1, 5)});
    for (auto strategy : {Strategy::line_sweep, Strategy::spatial_hash}) {
      const auto lab = components(occ, spec, strategy);
      CHECK(lab.num_components() == 1);
      CHECK(lab.c1 == 3);
    }
  }
  {
    const auto occ = occupied_from_sites(spec, {site2(spec, 1, 1), site2(spec, 4, 4)});
    const auto lab = components(occ, spec);
    CHECK(lab.num_components() == 2);
    CHECK(lab.c1 == 1);
  }
}

TEST_CASE("components: line_sweep needs r = 1") {
  const auto spec = make_spec(3, 2, 2, 8, Topology::grid, 0.1);
  const auto occ = sample_occupied(spec, 3);
  CHECK_THROWS_AS(components(occ, spec, Strategy::line_sweep), PreconditionError);
}

TEST_CASE("components: spatial_hash matches all-pairs BFS in d = 3") {
  for (int inst = 0; inst < 200; ++inst) {
    const int r = 1 + inst % 2;
    const auto topology = inst % 4 < 2 ? Topology::grid : Topology::torus;
    const Coord omega = inst % 8 < 4 ? 4 : 3;  // 3 does not divide n
    const auto spec = make_spec(3, r, omega, 32, topology, 0.01);
    const auto occ = sample_occupied(spec, 1000 + inst);
    const auto lab = components(occ, spec, Strategy::spatial_hash);
    REQUIRE(lab.root == brute_force_roots(occ, spec));
  }
}

TEST_CASE("components: labeling invariants") {
  const auto spec = make_spec(2, 1, 3, 40, Topology::torus, 0.15);
  const auto occ = sample_occupied(spec, 5);
  const auto lab = components(occ, spec);
  std::uint64_t total = 0, largest = 0;
  for (std::uint32_t i = 0; i < occ.size(); ++i) {
    CHECK(lab.root[lab.root[i]] == lab.root[i]);
    total += lab.size[i];
    largest = std::max<std::uint64_t>(largest, lab.size[i]);
  }
  CHECK(total == occ.size());
  CHECK(largest == lab.c1);
}

TEST_CASE("property: strategy equivalence for r = 1") {
  for (int inst = 0; inst < 120; ++inst) {
    const int d = 2 + inst % 2;
    const auto topology = inst % 3 ? Topology::grid : Topology::torus;
    const Coord omega = 1 + inst % 5;
    const auto spec = make_spec(d, 1, omega, d == 2 ? 48 : 14, topology, 0.08 + 0.002 * inst);
    const auto occ = sample_occupied(spec, 77 + inst);
    REQUIRE(components(occ, spec, Strategy::line_sweep).root == components(occ, spec, Strategy::spatial_hash).root);
  }
}

TEST_CASE("property: partition refinement in omega") {
  for (int inst = 0; inst < 40; ++inst) {
    auto spec = make_spec(2, 1, 6, 64, inst % 2 ? Topology::torus : Topology::grid, 0.1);
    const auto occ = sample_occupied(spec, 500 + inst);
    const auto coarse = components(occ, spec);
    for (Coord w = 1; w < 6; ++w) {
      spec.omega = w;
      const auto fine = components(occ, spec);
      // Same fine block implies same coarse block.
      for (std::uint32_t i = 0; i < occ.size(); ++i) REQUIRE(coarse.root[fine.root[i]] == coarse.root[i]);
    }
  }
}

TEST_CASE("component_stats: examples") {
  const auto spec = make_spec(2, 1, 2, 10, Topology::grid, 0.0);
  {
    const auto lab = components(occupied_from_sites(spec, {}), spec);
    const auto st = component_stats(lab, spec);
    CHECK(st.c1 == 0);
    CHECK(st.size_histogram.empty());
    CHECK_FALSE(st.crossing_any_axis);
  }
  {
    std::vector<SiteIndex> row;
    for (Coord x = 0; x < 10; x += 2) row.push_back(site2(spec, x, 5));
    const auto st = component_stats(components(occupied_from_sites(spec, row), spec), spec);
    CHECK(st.crossing_any_axis);
  }
  {
    // Components of sizes 3, 3 and 5 on separate rows and columns.
    std::vector<SiteIndex> sites;
    for (Coord x : {0, 1, 2}) sites.push_back(site2(spec, x, 0));
    for (Coord x : {5, 6, 7}) sites.push_back(site2(spec, x, 4));
    for (Coord y : {5, 6, 7, 8, 9}) sites.push_back(site2(spec, 3, y));
    const auto st = component_stats(components(occupied_from_sites(spec, sites), spec), spec);
    CHECK(st.c1 == 5);
    CHECK(st.size_histogram == std::map<std::uint64_t, std::uint64_t>{{3, 2}, {5, 1}});
  }
}

TEST_CASE("explore_component: isolated origin") {
  const auto spec = make_spec(2, 1, 2, 16, Topology::grid, 0.0);
  const auto origin = site2(spec, 8, 8);
  const auto occ = occupied_from_sites(spec, {origin, site2(spec, 11, 11)});
  const auto trace = explore_component(occ, spec, origin);
  REQUIRE(trace.generations.size() == 1);
  CHECK(trace.generations[0] == std::vector<SiteIndex>{origin});
  CHECK_FALSE(trace.truncated);
  CHECK_THROWS_AS(explore_component(occ, spec, site2(spec, 0, 0)), PreconditionError);
}

TEST_CASE("property: exploration equals the union-find component") {
  for (int inst = 0; inst < 500; ++inst) {
    const auto topology = inst % 2 ? Topology::torus : Topology::grid;
    const auto spec = make_spec(2, 1, 4, 64, topology, 0.02 + 0.0002 * inst);
    const auto occ = sample_occupied(spec, 9000 + inst);
    if (occ.empty()) continue;
    const SiteIndex origin = occ.sites[mix64(inst) % occ.size()];
    const auto trace = explore_component(occ, spec, origin);
    REQUIRE_FALSE(trace.truncated);
    REQUIRE(trace.generations[0] == std::vector<SiteIndex>{origin});
    std::set<SiteIndex> seen;
    for (const auto& g : trace.generations)
      for (SiteIndex s : g) REQUIRE(seen.insert(s).second);  // pairwise disjoint
    REQUIRE(seen == component_of(occ, components(occ, spec), origin));
  }
}

TEST_CASE("explore_conditioned agrees with explore_component on the same marks") {
  for (int inst = 0; inst < 50; ++inst) {
    auto spec = make_spec(2, 1, 3, 40, Topology::torus, 0.06);
    const std::uint64_t seed = 300 + inst;
    auto occ = sample_occupied(spec, seed);
    const SiteIndex origin = site2(spec, 20, 20);
    auto sites = occ.sites;
    if (!occ.contains(origin)) {
      sites.insert(std::lower_bound(sites.begin(), sites.end(), origin), origin);
      occ = occupied_from_sites(spec, sites);
    }
    const auto a = explore_component(occ, spec, origin);
    const auto b = explore_conditioned(spec, seed, origin);
    REQUIRE(a.generations == b.generations);
  }
}

TEST_CASE("first generation mean on a wide torus") {
  const double mu = 0.5;
  const Coord omega = 16;
  const double p = -std::expm1(-mu / static_cast<double>(omega));  // e^-mu = (1-p)^omega
  const auto spec = make_spec(2, 1, omega, 100 * omega, Topology::torus, p);
  ExplorationCaps caps;
  caps.max_generations = 2;
  RunningStats y1;
  for (std::uint64_t rep = 0; rep < 10'000; ++rep) {
    const auto t = explore_conditioned(spec, substream(42, rep), 0, caps);
    y1.add(t.generations.size() > 1 ? static_cast<double>(t.generations[1].size()) : 0.0);
  }
  CHECK(std::abs(y1.estimate().z_score(4.0 * std::expm1(mu))) < 3.0);
}

TEST_CASE("property: domination by the branching process") {
  const auto st = origin_statistics(32, 0.5, 50, 100'000, 17);
  CHECK(std::abs(st.tail[1].z_score(-std::expm1(-4.0 * st.mu))) < 3.0);
  BranchingSpec bp;
  bp.mu = st.mu;
  const auto tail = progeny_tail_curve(bp, 50, 200'000, 18);
  for (std::size_t k = 0; k < 50; ++k)
    CHECK(st.tail[k].mean <= tail[k].mean + 3.0 * combined_stderr(st.tail[k], tail[k]));
}

TEST_CASE("bond_components: extremes and giant fraction") {
  auto spec = make_spec(2, 1, 3, 20, Topology::grid, 0.0);
  CHECK(bond_components(spec, 0.0, 1).num_components() == 400);
  CHECK(bond_components(spec, 1.0, 1).num_components() == 1);
  CHECK_THROWS_AS(bond_components(spec, -0.1, 1), PreconditionError);

  const auto sample = giant_sample(PercolationModel::bond, 32, 1024, 0.5, 20, 23);
  RunningStats frac;
  for (std::size_t i = 0; i < sample.c1.size(); ++i)
    frac.add(static_cast<double>(sample.c1[i]) / static_cast<double>(sample.vertices[i]));
  CHECK(std::abs(frac.mean() - phi_bar(2.0)) <= 0.05);
}

TEST_CASE("bond_labeling couples densities monotonically") {
  const auto spec = make_spec(2, 1, 4, 48, Topology::torus, 0.0);
  const auto edges = sample_bond_edges(spec, 0.2, 5);
  std::uint64_t prev = 0;
  for (double q : {0.0, 0.02, 0.05, 0.1, 0.2}) {
    const auto lab = bond_labeling(spec, edges, 0.2, q);
    CHECK(lab.c1 >= prev);
    prev = lab.c1;
  }
}

TEST_CASE("property: determinism across thread counts") {
  const auto a = giant_sample(PercolationModel::site, 8, 200, 1.0, 12, 5, 1);
  const auto b = giant_sample(PercolationModel::site, 8, 200, 1.0, 12, 5, 4);
  CHECK(a.c1 == b.c1);
  CHECK(a.vertices == b.vertices);
  const auto s1 = origin_statistics(8, 0.8, 20, 3000, 9, kDefaultWindow, 1);
  const auto s4 = origin_statistics(8, 0.8, 20, 3000, 9, kDefaultWindow, 3);
  for (std::size_t k = 0; k < 20; ++k) CHECK(s1.tail[k].mean == s4.tail[k].mean);
  CHECK(s1.first_generation.mean == s4.first_generation.mean);
}

TEST_CASE("write_labeling_csv") {
  const auto spec = make_spec(2, 1, 2, 8, Topology::grid, 0.0);
  const std::vector<SiteIndex> sites{site2(spec, 1, 1), site2(spec, 1, 3)};
  const auto occ = occupied_from_sites(spec, sites);
  std::ostringstream out;
  write_labeling_csv(out, spec, occ.sites, components(occ, spec));
  CHECK(out.str() == "site,root,component_size\n1:1,1:1,2\n1:3,1:1,2\n");
}

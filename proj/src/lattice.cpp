#include "losp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "losp/errors.hpp"
#include "losp/random.hpp"
#include "losp/union_find.hpp"

namespace losp {

void LatticeSpec::validate() const {
  require(d >= 1 && d <= kMaxLatticeDim,
          "lattice: dimension must be in [1, " + std::to_string(kMaxLatticeDim) + "]");
  require(r >= 1 && r <= std::max(1, d - 1), "lattice: need 1 <= r <= max(1, d-1)");
  require(n >= 1, "lattice: side n must be positive");
  require(omega >= 1 && omega <= n, "lattice: need 1 <= omega <= n");
  require(p >= 0.0 && p <= 1.0, "lattice: p must lie in [0,1]");
}

LatticeGeometry::LatticeGeometry(const LatticeSpec& spec)
    : d_(spec.d), n_(spec.n), topology_(spec.topology), num_sites_(1) {
  spec.validate();
  const auto side = static_cast<std::uint64_t>(n_);
  for (int a = 0; a < d_; ++a) {
    stride_[a] = num_sites_;
    if (num_sites_ > std::numeric_limits<std::uint64_t>::max() / side)
      throw CapacityError("lattice: n^d overflows the site index space");
    num_sites_ *= side;
  }
}

std::array<Coord, kMaxLatticeDim> LatticeGeometry::coords(SiteIndex s) const {
  std::array<Coord, kMaxLatticeDim> c{};
  for (int a = 0; a < d_; ++a) c[a] = coord(s, a);
  return c;
}

SiteIndex LatticeGeometry::index(std::span<const Coord> coords) const {
  require(static_cast<int>(coords.size()) == d_, "lattice: coordinate arity mismatch");
  SiteIndex s = 0;
  for (int a = 0; a < d_; ++a) {
    require(coords[a] >= 0 && coords[a] < n_, "lattice: coordinate out of range");
    s += static_cast<SiteIndex>(coords[a]) * stride_[a];
  }
  return s;
}

std::optional<SiteIndex> LatticeGeometry::step(SiteIndex s, int axis, Coord delta) const {
  const Coord c = coord(s, axis);
  Coord t = c + delta;
  if (topology_ == Topology::grid) {
    if (t < 0 || t >= n_) return std::nullopt;
  } else {
    t %= n_;
    if (t < 0) t += n_;
  }
  return s + static_cast<SiteIndex>(t) * stride_[axis] - static_cast<SiteIndex>(c) * stride_[axis];
}

Coord LatticeGeometry::axis_distance(Coord a, Coord b) const {
  const Coord diff = a > b ? a - b : b - a;
  return topology_ == Topology::torus ? std::min(diff, n_ - diff) : diff;
}

std::optional<std::uint32_t> OccupiedSet::find(SiteIndex s) const {
  const auto it = std::lower_bound(sites.begin(), sites.end(), s);
  if (it == sites.end() || *it != s) return std::nullopt;
  return static_cast<std::uint32_t>(it - sites.begin());
}

double site_uniform(std::uint64_t seed, SiteIndex s) { return to_unit(hash2(seed, s)); }

namespace {

void build_lines(const LatticeGeometry& geo, OccupiedSet& occ) {
  if (occ.sites.size() >= std::numeric_limits<std::uint32_t>::max())
    throw CapacityError("lattice: too many occupied sites");
  const std::uint64_t lines = geo.num_lines();
  if (lines > (std::uint64_t{1} << 28))
    throw CapacityError("lattice: too many lines to index (n^(d-1) > 2^28)");

  occ.lines.assign(geo.dim(), {});
  for (int a = 0; a < geo.dim(); ++a) {
    LineIndex& li = occ.lines[a];
    li.offsets.assign(lines + 1, 0);
    for (SiteIndex s : occ.sites) ++li.offsets[geo.line_of(s, a) + 1];
    for (std::uint64_t l = 0; l < lines; ++l) li.offsets[l + 1] += li.offsets[l];
    li.position.resize(occ.sites.size());
    li.member.resize(occ.sites.size());
    std::vector<std::uint32_t> fill(li.offsets.begin(), li.offsets.end() - 1);
    // Sites are sorted by index, and along a fixed line the index increases
    // with the free coordinate, so appending keeps each line sorted.
    for (std::uint32_t i = 0; i < occ.sites.size(); ++i) {
      const SiteIndex s = occ.sites[i];
      const std::uint32_t slot = fill[geo.line_of(s, a)]++;
      li.position[slot] = geo.coord(s, a);
      li.member[slot] = i;
    }
  }
}

ComponentLabeling finalize(UnionFind& uf, const LatticeGeometry& geo, Coord omega,
                           std::span<const SiteIndex> sites) {
  const std::size_t count = uf.size();
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> canonical(count, kUnset);

  ComponentLabeling lab;
  lab.root.resize(count);
  lab.size.assign(count, 0);
  lab.crossing.assign(geo.dim(), false);
  std::vector<std::uint32_t> touch(count, 0);  // bit 2a: low slab, bit 2a+1: high slab

  const Coord n = geo.side();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t r = uf.find(i);
    if (canonical[r] == kUnset) canonical[r] = i;
    const std::uint32_t rep = canonical[r];
    lab.root[i] = rep;
    ++lab.size[rep];
    const SiteIndex s = sites.empty() ? SiteIndex{i} : sites[i];
    for (int a = 0; a < geo.dim(); ++a) {
      const Coord c = geo.coord(s, a);
      if (c < omega) touch[rep] |= 1u << (2 * a);
      if (c >= n - omega) touch[rep] |= 1u << (2 * a + 1);
    }
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    if (lab.size[i] == 0) continue;
    lab.c1 = std::max<std::uint64_t>(lab.c1, lab.size[i]);
    for (int a = 0; a < geo.dim(); ++a) {
      const std::uint32_t both = 3u << (2 * a);
      if ((touch[i] & both) == both) lab.crossing[a] = true;
    }
  }
  return lab;
}

void union_line_sweep(const OccupiedSet& occ, const LatticeSpec& spec, UnionFind& uf) {
  const bool torus = spec.topology == Topology::torus;
  for (const LineIndex& li : occ.lines) {
    for (std::size_t l = 0; l + 1 < li.offsets.size(); ++l) {
      const std::uint32_t begin = li.offsets[l];
      const std::uint32_t end = li.offsets[l + 1];
      if (end - begin < 2) continue;
      for (std::uint32_t k = begin; k + 1 < end; ++k) {
        if (li.position[k + 1] - li.position[k] <= spec.omega) uf.unite(li.member[k], li.member[k + 1]);
      }
      if (torus && li.position[begin] + spec.n - li.position[end - 1] <= spec.omega)
        uf.unite(li.member[begin], li.member[end - 1]);
    }
  }
}

bool adjacent(const LatticeGeometry& geo, const LatticeSpec& spec, SiteIndex s, SiteIndex t) {
  int differing = 0;
  for (int a = 0; a < geo.dim(); ++a) {
    const Coord dist = geo.axis_distance(geo.coord(s, a), geo.coord(t, a));
    if (dist == 0) continue;
    if (dist > spec.omega || ++differing > spec.r) return false;
  }
  return differing > 0;
}

void union_spatial_hash(const OccupiedSet& occ, const LatticeSpec& spec,
                        const LatticeGeometry& geo, UnionFind& uf) {
  const int d = geo.dim();
  const Coord cells_per_axis = (spec.n + spec.omega - 1) / spec.omega;
  const bool torus = spec.topology == Topology::torus;
  // A partial last cell lets torus neighbours sit two cells apart across the seam.
  const int reach = torus && spec.n % spec.omega != 0 ? 2 : 1;

  auto cell_key = [&](const std::array<Coord, kMaxLatticeDim>& cell) {
    std::uint64_t key = 0;
    for (int a = d - 1; a >= 0; --a) key = key * static_cast<std::uint64_t>(cells_per_axis) + cell[a];
    return key;
  };

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(occ.size());
  for (std::uint32_t i = 0; i < occ.size(); ++i) {
    auto c = geo.coords(occ.sites[i]);
    for (int a = 0; a < d; ++a) c[a] /= spec.omega;
    keyed[i] = {cell_key(c), i};
  }
  std::sort(keyed.begin(), keyed.end());
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> buckets;
  buckets.reserve(keyed.size());
  for (std::uint32_t k = 0; k < keyed.size();) {
    std::uint32_t e = k;
    while (e < keyed.size() && keyed[e].first == keyed[k].first) ++e;
    buckets.emplace(keyed[k].first, std::pair{k, e});
    k = e;
  }

  std::vector<std::uint64_t> neighbours;
  for (std::uint32_t i = 0; i < occ.size(); ++i) {
    auto home = geo.coords(occ.sites[i]);
    for (int a = 0; a < d; ++a) home[a] /= spec.omega;

    neighbours.clear();
    std::array<Coord, kMaxLatticeDim> cell{};
    std::array<int, kMaxLatticeDim> offset{};
    offset.fill(-reach);
    for (;;) {
      bool inside = true;
      for (int a = 0; a < d; ++a) {
        Coord c = home[a] + offset[a];
        if (torus) {
          c = (c % cells_per_axis + cells_per_axis) % cells_per_axis;
        } else if (c < 0 || c >= cells_per_axis) {
          inside = false;
        }
        cell[a] = c;
      }
      if (inside) neighbours.push_back(cell_key(cell));
      int a = 0;
      while (a < d && offset[a] == reach) offset[a++] = -reach;
      if (a == d) break;
      ++offset[a];
    }
    std::sort(neighbours.begin(), neighbours.end());
    neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());

    for (std::uint64_t key : neighbours) {
      const auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      for (std::uint32_t k = it->second.first; k < it->second.second; ++k) {
        const std::uint32_t j = keyed[k].second;
        if (j <= i) continue;
        if (adjacent(geo, spec, occ.sites[i], occ.sites[j])) uf.unite(i, j);
      }
    }
  }
}

}  // namespace

OccupiedSet sample_occupied(const LatticeSpec& spec, std::uint64_t seed) {
  const LatticeGeometry geo(spec);
  OccupiedSet occ;
  if (spec.p > 0.0) {
    const std::uint64_t total = geo.num_sites();
    occ.sites.reserve(static_cast<std::size_t>(std::min<double>(
        static_cast<double>(total) * spec.p * 1.05 + 16.0, static_cast<double>(total))));
    for (SiteIndex s = 0; s < total; ++s) {
      if (site_uniform(seed, s) < spec.p) occ.sites.push_back(s);
    }
  }
  build_lines(geo, occ);
  return occ;
}

OccupiedSet occupied_from_sites(const LatticeSpec& spec, std::vector<SiteIndex> sites) {
  const LatticeGeometry geo(spec);
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  require(sites.empty() || sites.back() < geo.num_sites(), "lattice: site index out of range");
  OccupiedSet occ;
  occ.sites = std::move(sites);
  build_lines(geo, occ);
  return occ;
}

std::size_t ComponentLabeling::num_components() const {
  return static_cast<std::size_t>(std::count_if(size.begin(), size.end(), [](auto s) { return s > 0; }));
}

ComponentLabeling components(const OccupiedSet& occ, const LatticeSpec& spec, Strategy strategy) {
  const LatticeGeometry geo(spec);
  UnionFind uf(occ.size());
  if (strategy == Strategy::line_sweep) {
    if (spec.r != 1) throw PreconditionError("components: line_sweep supports only r = 1");
    union_line_sweep(occ, spec, uf);
  } else {
    union_spatial_hash(occ, spec, geo, uf);
  }
  return finalize(uf, geo, spec.omega, occ.sites);
}

ComponentStats component_stats(const ComponentLabeling& lab, const LatticeSpec&) {
  ComponentStats stats;
  for (std::size_t i = 0; i < lab.size.size(); ++i) {
    if (lab.size[i] == 0) continue;
    ++stats.size_histogram[lab.size[i]];
    stats.c1 = std::max<std::uint64_t>(stats.c1, lab.size[i]);
  }
  stats.crossing_any_axis = std::any_of(lab.crossing.begin(), lab.crossing.end(), [](bool b) { return b; });
  return stats;
}

std::uint64_t ExplorationTrace::total() const {
  std::uint64_t t = 0;
  for (const auto& g : generations) t += g.size();
  return t;
}

namespace {

template <typename Occupied>
ExplorationTrace explore(const LatticeGeometry& geo, Coord omega, SiteIndex origin,
                         ExplorationCaps caps, Occupied&& occupied) {
  ExplorationTrace trace;
  trace.origin = origin;
  trace.generations.push_back({origin});

  std::unordered_set<SiteIndex> reached;
  reached.insert(origin);
  std::uint64_t total = 1;

  const int d = geo.dim();
  const Coord n = geo.side();
  const bool torus = geo.topology() == Topology::torus;
  // Longest sweep before coming back round the torus.
  const Coord max_steps = torus ? n - 1 : n;

  struct Found {
    SiteIndex site;
    int axis;  // axis along which it was found; -1 for the origin
  };
  std::vector<Found> frontier{{origin, -1}};
  std::vector<Found> next;

  // Returns false once the population cap is hit.
  auto sweep = [&](SiteIndex from, int axis, Coord dir) {
    Coord failures = 0;
    for (Coord k = 1; k <= max_steps && failures < omega; ++k) {
      const auto s = geo.step(from, axis, dir * k);
      if (!s) break;
      if (occupied(*s) && reached.insert(*s).second) {
        next.push_back({*s, axis});
        failures = 0;
        if (++total >= caps.max_population) return false;
      } else {
        ++failures;
      }
    }
    return true;
  };

  while (!frontier.empty()) {
    if (trace.generations.size() >= caps.max_generations) {
      trace.truncated = true;
      break;
    }
    next.clear();
    bool capped = false;
    for (const Found& f : frontier) {
      for (int b = 0; b < d && !capped; ++b) {
        if (b == f.axis) continue;
        capped = !sweep(f.site, b, +1) || !sweep(f.site, b, -1);
      }
      if (capped) break;
    }
    if (!next.empty()) {
      std::vector<SiteIndex> generation;
      generation.reserve(next.size());
      for (const Found& f : next) generation.push_back(f.site);
      trace.generations.push_back(std::move(generation));
    }
    if (capped) {
      trace.truncated = true;
      break;
    }
    frontier.swap(next);
  }
  return trace;
}

}  // namespace

ExplorationTrace explore_component(const OccupiedSet& occ, const LatticeSpec& spec,
                                   SiteIndex origin, ExplorationCaps caps) {
  if (spec.r != 1) throw PreconditionError("explore_component: exploration is defined for r = 1");
  const LatticeGeometry geo(spec);
  if (!occ.contains(origin)) throw PreconditionError("explore_component: origin is not occupied");
  return explore(geo, spec.omega, origin, caps, [&](SiteIndex s) { return occ.contains(s); });
}

ExplorationTrace explore_conditioned(const LatticeSpec& spec, std::uint64_t seed, SiteIndex origin,
                                     ExplorationCaps caps) {
  if (spec.r != 1) throw PreconditionError("explore_conditioned: exploration is defined for r = 1");
  const LatticeGeometry geo(spec);
  require(origin < geo.num_sites(), "explore_conditioned: origin out of range");
  const double p = spec.p;
  return explore(geo, spec.omega, origin, caps,
                 [&](SiteIndex s) { return s == origin || site_uniform(seed, s) < p; });
}

std::vector<BondEdge> sample_bond_edges(const LatticeSpec& spec, double p_hi, std::uint64_t seed) {
  require(spec.d == 2 && spec.r == 1, "bond: only the planar r = 1 model is supported");
  require(p_hi >= 0.0 && p_hi <= 1.0, "bond: p must lie in [0,1]");
  const LatticeGeometry geo(spec);
  if (geo.num_sites() >= std::numeric_limits<std::uint32_t>::max())
    throw CapacityError("bond: too many vertices");

  const Coord n = spec.n;
  const Coord omega = spec.omega;
  const bool torus = spec.topology == Topology::torus;
  // On the torus an unordered pair at offset k is also at offset n-k; keep
  // offsets up to n/2 and count the antipodal pair (n even) from one end.
  const Coord max_offset = torus ? std::min(omega, n / 2) : std::min(omega, n - 1);

  std::vector<BondEdge> edges;
  if (p_hi <= 0.0 || max_offset < 1) return edges;
  edges.reserve(static_cast<std::size_t>(2.2 * static_cast<double>(geo.num_sites()) *
                                         static_cast<double>(max_offset) * p_hi) + 16);

  const std::uint64_t slots = geo.num_sites() * static_cast<std::uint64_t>(omega);
  const double skip_fail = 1.0 - p_hi;
  for (int axis = 0; axis < 2; ++axis) {
    SplitMix64 rng(substream(seed, static_cast<std::uint64_t>(axis)));
    std::uint64_t slot = geometric_failures(rng, skip_fail);
    while (slot < slots) {
      const SiteIndex v = slot / static_cast<std::uint64_t>(omega);
      const Coord k = static_cast<Coord>(slot % static_cast<std::uint64_t>(omega)) + 1;
      const double mark = rng.uniform();
      const Coord c = geo.coord(v, axis);
      bool valid = k <= max_offset;
      if (valid && !torus) valid = c + k < n;
      if (valid && torus && 2 * k == n) valid = c < n / 2;
      if (valid) {
        const SiteIndex w = *geo.step(v, axis, k);
        edges.push_back({static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(w), mark});
      }
      const std::uint64_t gap = geometric_failures(rng, skip_fail);
      if (gap >= slots - slot) break;
      slot += gap + 1;
    }
  }
  return edges;
}

ComponentLabeling bond_labeling(const LatticeSpec& spec, std::span<const BondEdge> edges,
                                double p_hi, double q) {
  require(q >= 0.0 && q <= p_hi, "bond_labeling: need 0 <= q <= p_hi");
  const LatticeGeometry geo(spec);
  UnionFind uf(geo.num_sites());
  for (const BondEdge& e : edges) {
    if (e.mark * p_hi < q) uf.unite(e.a, e.b);
  }
  return finalize(uf, geo, spec.omega, {});
}

ComponentLabeling bond_components(const LatticeSpec& spec, double p, std::uint64_t seed) {
  require(p >= 0.0 && p <= 1.0, "bond: p must lie in [0,1]");
  const auto edges = sample_bond_edges(spec, p, seed);
  // Every candidate sampled at density p is open at density p.
  const LatticeGeometry geo(spec);
  UnionFind uf(geo.num_sites());
  for (const BondEdge& e : edges) uf.unite(e.a, e.b);
  return finalize(uf, geo, spec.omega, {});
}

void write_labeling_csv(std::ostream& out, const LatticeSpec& spec, std::span<const SiteIndex> sites,
                        const ComponentLabeling& lab) {
  const LatticeGeometry geo(spec);
  auto write_site = [&](SiteIndex s) {
    const auto c = geo.coords(s);
    for (int a = 0; a < geo.dim(); ++a) out << (a ? ":" : "") << c[a];
  };
  auto site_at = [&](std::uint32_t i) { return sites.empty() ? SiteIndex{i} : sites[i]; };
  out << "site,root,component_size\n";
  for (std::uint32_t i = 0; i < lab.root.size(); ++i) {
    write_site(site_at(i));
    out << ',';
    write_site(site_at(lab.root[i]));
    out << ',' << lab.component_size(i) << '\n';
  }
}

}  // namespace losp

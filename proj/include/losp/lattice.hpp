#pragma once

// Site and bond line-of-sight percolation on the n^d grid or torus.
//
// Two sites are adjacent when they differ in at most r coordinates and by at
// most omega in each of those (r = 1, d = 2 is the planar line-of-sight
// lattice). Sites are addressed by a mixed-radix linear index with coordinate
// 0 least significant.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace losp {

enum class Topology { grid, torus };

using SiteIndex = std::uint64_t;
using Coord = std::int64_t;

inline constexpr int kMaxLatticeDim = 8;

struct LatticeSpec {
  int d = 2;
  int r = 1;
  Coord omega = 1;
  Coord n = 1;
  Topology topology = Topology::grid;
  double p = 0.0;

  /// Throws PreconditionError unless 1 <= r <= max(1, d-1), 1 <= omega <= n
  /// and 0 <= p <= 1.
  void validate() const;
};

/// Index arithmetic on the n^d box.
class LatticeGeometry {
 public:
  /// Throws CapacityError if n^d does not fit the index space.
  explicit LatticeGeometry(const LatticeSpec& spec);

  int dim() const { return d_; }
  Coord side() const { return n_; }
  Topology topology() const { return topology_; }
  std::uint64_t num_sites() const { return num_sites_; }
  /// Lines per axis, n^(d-1).
  std::uint64_t num_lines() const { return num_sites_ / static_cast<std::uint64_t>(n_); }

  Coord coord(SiteIndex s, int axis) const {
    return static_cast<Coord>((s / stride_[axis]) % static_cast<std::uint64_t>(n_));
  }
  std::array<Coord, kMaxLatticeDim> coords(SiteIndex s) const;
  SiteIndex index(std::span<const Coord> coords) const;

  /// Identifier of the axis-parallel line through s (coordinate `axis` dropped).
  std::uint64_t line_of(SiteIndex s, int axis) const {
    const std::uint64_t high = s / (stride_[axis] * static_cast<std::uint64_t>(n_));
    return high * stride_[axis] + s % stride_[axis];
  }

  /// Site `delta` steps along `axis`; nullopt when it leaves the grid.
  std::optional<SiteIndex> step(SiteIndex s, int axis, Coord delta) const;

  /// |a - b| on the grid, the shorter way round on the torus.
  Coord axis_distance(Coord a, Coord b) const;

 private:
  int d_;
  Coord n_;
  Topology topology_;
  std::uint64_t num_sites_;
  std::array<std::uint64_t, kMaxLatticeDim> stride_{};
};

/// Per-axis CSR of occupied sites grouped by line, positions increasing.
struct LineIndex {
  std::vector<std::uint32_t> offsets;  // num_lines + 1
  std::vector<Coord> position;         // free coordinate along the axis
  std::vector<std::uint32_t> member;   // index into OccupiedSet::sites
};

struct OccupiedSet {
  std::vector<SiteIndex> sites;  // strictly increasing
  std::vector<LineIndex> lines;  // one per axis

  std::size_t size() const { return sites.size(); }
  bool empty() const { return sites.empty(); }
  std::optional<std::uint32_t> find(SiteIndex s) const;
  bool contains(SiteIndex s) const { return find(s).has_value(); }
};

/// Occupation mark of site s under `seed`: s is a vertex at density p iff
/// site_uniform(seed, s) < p. The marks couple all densities monotonically.
double site_uniform(std::uint64_t seed, SiteIndex s);

/// Each of the n^d sites independently with probability spec.p.
OccupiedSet sample_occupied(const LatticeSpec& spec, std::uint64_t seed);

/// Builds the occupied set (and line indices) from an explicit site list.
OccupiedSet occupied_from_sites(const LatticeSpec& spec, std::vector<SiteIndex> sites);

enum class Strategy { line_sweep, spatial_hash };

struct ComponentLabeling {
  /// Representative per site (the smallest member index of its component).
  std::vector<std::uint32_t> root;
  /// Component size stored at representatives, 0 elsewhere.
  std::vector<std::uint32_t> size;
  std::uint64_t c1 = 0;
  /// Per axis: some component meets both boundary slabs of width omega.
  std::vector<bool> crossing;

  std::uint32_t component_size(std::uint32_t i) const { return size[root[i]]; }
  std::size_t num_components() const;
};

/// Connected components of the induced subgraph. line_sweep needs r = 1.
ComponentLabeling components(const OccupiedSet& occ, const LatticeSpec& spec,
                             Strategy strategy = Strategy::line_sweep);

struct ComponentStats {
  std::uint64_t c1 = 0;
  std::map<std::uint64_t, std::uint64_t> size_histogram;  // size -> count
  bool crossing_any_axis = false;
};

ComponentStats component_stats(const ComponentLabeling& lab, const LatticeSpec& spec);

struct ExplorationCaps {
  std::uint64_t max_generations = 10'000;
  std::uint64_t max_population = 1'000'000;
};

struct ExplorationTrace {
  SiteIndex origin = 0;
  std::vector<std::vector<SiteIndex>> generations;  // Y_0 = {origin}, Y_1, ...
  bool truncated = false;

  std::uint64_t total() const;
};

/// Generational line exploration of the origin's component (r = 1).
///
/// Y_1 holds the sites met by the 2d directional sweeps from the origin;
/// a site found while sweeping along axis a is later swept along every other
/// axis. A sweep tests successive sites and stops after omega consecutive
/// failures, a test failing when the site is empty or already reached.
ExplorationTrace explore_component(const OccupiedSet& occ, const LatticeSpec& spec,
                                   SiteIndex origin, ExplorationCaps caps = {});

/// The same exploration on the lattice sample_occupied(spec, seed) would
/// produce, with the origin forced occupied. Sites are sampled on demand, so
/// the cost is independent of n^d.
ExplorationTrace explore_conditioned(const LatticeSpec& spec, std::uint64_t seed,
                                     SiteIndex origin, ExplorationCaps caps = {});

/// Bond variant (d = 2, r = 1): every site is a vertex and each same-line pair
/// at distance <= omega is joined with probability p. Edges are found by
/// geometric skipping, so the work is O(n^2 p omega).
ComponentLabeling bond_components(const LatticeSpec& spec, double p, std::uint64_t seed);

struct BondEdge {
  std::uint32_t a;
  std::uint32_t b;
  double mark;  // uniform on [0,1); the edge is open at density q iff mark * p_hi < q
};

/// Candidate edges at density p_hi, each with a coupling mark, so a single
/// sample yields monotonically coupled bond configurations for every q <= p_hi.
std::vector<BondEdge> sample_bond_edges(const LatticeSpec& spec, double p_hi, std::uint64_t seed);

/// Components of the bond configuration at density q <= p_hi.
ComponentLabeling bond_labeling(const LatticeSpec& spec, std::span<const BondEdge> edges,
                                double p_hi, double q);

/// One row per site: site coordinates, representative coordinates, size.
void write_labeling_csv(std::ostream& out, const LatticeSpec& spec,
                        std::span<const SiteIndex> sites, const ComponentLabeling& lab);

}  // namespace losp

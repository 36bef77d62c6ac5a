#include "losp/gilbert.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include "losp/errors.hpp"
#include "losp/parallel.hpp"
#include "losp/random.hpp"
#include "losp/union_find.hpp"

namespace losp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate_shape(const GilbertShape& s) {
  std::visit(overloaded{
                 [](const shape::Segment&) {},
                 [](const shape::Cube& c) {
                   require(c.d >= 1 && c.d <= kMaxGilbertDim, "gilbert: cube dimension must be in [1,4]");
                 },
                 [](const shape::Cross2D& c) { require(c.eps > 0 && c.eps < 1, "gilbert: eps must be in (0,1)"); },
                 [](const shape::SquareAnnulus& c) {
                   require(c.eps > 0 && c.eps < 1, "gilbert: eps must be in (0,1)");
                 },
                 [](const shape::FacePair&) {},
             },
             s);
}

std::string shape_name(const GilbertShape& s) {
  return std::visit(overloaded{
                        [](const shape::Segment&) { return std::string("segment"); },
                        [](const shape::Cube& c) { return "cube" + std::to_string(c.d); },
                        [](const shape::Cross2D& c) { return "cross(" + std::to_string(c.eps) + ")"; },
                        [](const shape::SquareAnnulus& c) { return "annulus(" + std::to_string(c.eps) + ")"; },
                        [](const shape::FacePair&) { return std::string("facepair"); },
                    },
                    s);
}

int continuous_dim(const GilbertShape& s) {
  return std::visit(overloaded{
                        [](const shape::Segment&) { return 1; },
                        [](const shape::Cube& c) { return c.d; },
                        [](const auto&) { return 2; },
                    },
                    s);
}

bool has_levels(const GilbertShape& s) { return std::holds_alternative<shape::FacePair>(s); }

double shape_measure(const GilbertShape& s) {
  return std::visit(overloaded{
                        [](const shape::Segment&) { return 2.0; },
                        [](const shape::Cube& c) { return std::ldexp(1.0, c.d); },
                        [](const shape::Cross2D& c) { return 8.0 * c.eps - 4.0 * c.eps * c.eps; },
                        [](const shape::SquareAnnulus& c) { return 4.0 - 4.0 * (1.0 - c.eps) * (1.0 - c.eps); },
                        [](const shape::FacePair&) { return 8.0; },
                    },
                    s);
}

bool shape_contains(const GilbertShape& s, const double* diff, int level_diff) {
  return std::visit(
      overloaded{
          [&](const shape::Segment&) { return level_diff == 0 && std::abs(diff[0]) <= 1.0; },
          [&](const shape::Cube& c) {
            if (level_diff != 0) return false;
            for (int i = 0; i < c.d; ++i)
              if (std::abs(diff[i]) > 1.0) return false;
            return true;
          },
          [&](const shape::Cross2D& c) {
            const double x = std::abs(diff[0]), y = std::abs(diff[1]);
            return level_diff == 0 && ((x <= 1.0 && y <= c.eps) || (x <= c.eps && y <= 1.0));
          },
          [&](const shape::SquareAnnulus& c) {
            const double m = std::max(std::abs(diff[0]), std::abs(diff[1]));
            return level_diff == 0 && m <= 1.0 && m > 1.0 - c.eps;
          },
          [&](const shape::FacePair&) {
            return (level_diff == 1 || level_diff == -1) && std::abs(diff[0]) <= 1.0 && std::abs(diff[1]) <= 1.0;
          },
      },
      s);
}

void TruncationPolicy::validate() const {
  require(box_half_width >= 10.0, "gilbert: box_half_width must be >= 10");
  require(box_half_width <= 30000.0, "gilbert: box_half_width too large for the cell index");
  require(max_component >= 1000, "gilbert: max_component must be >= 1000");
  require(levels >= 2 && levels <= 30000, "gilbert: levels must be in [2, 30000]");
}

namespace {

struct GPoint {
  std::array<double, kMaxGilbertDim> x{};
  int level = 0;
};

std::uint64_t cell_key(const std::array<int, kMaxGilbertDim + 1>& c) {
  std::uint64_t key = 0;
  for (int v : c) key = (key << 12) ^ static_cast<std::uint64_t>(static_cast<std::uint16_t>(v + 32768));
  return key;
}

}  // namespace

ComponentDraw gilbert_component_size(double lambda, const GilbertShape& shape, const TruncationPolicy& trunc,
                                     std::uint64_t seed) {
  require(lambda > 0.0, "gilbert: lambda must be positive");
  validate_shape(shape);
  trunc.validate();

  const int k = continuous_dim(shape);
  const bool levelled = has_levels(shape);
  const int half_cells = static_cast<int>(std::ceil(trunc.box_half_width));
  const int max_level = levelled ? trunc.levels : 0;
  const double shell = half_cells - 2.0;  // one shape diameter inside the box

  std::vector<GPoint> pts(1);  // the origin
  std::vector<std::uint8_t> seen(1, 1);
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> cells;
  cells.reserve(64);

  auto materialize = [&](const std::array<int, kMaxGilbertDim + 1>& c) {
    const std::uint64_t key = cell_key(c);
    auto it = cells.find(key);
    if (it != cells.end()) return it->second;
    SplitMix64 rng(hash2(seed, key));
    const auto count = static_cast<std::uint32_t>(std::poisson_distribution<std::int64_t>(lambda)(rng));
    const auto begin = static_cast<std::uint32_t>(pts.size());
    for (std::uint32_t i = 0; i < count; ++i) {
      GPoint p;
      for (int a = 0; a < k; ++a) p.x[a] = c[a] + rng.uniform();
      p.level = c[kMaxGilbertDim];
      pts.push_back(p);
      seen.push_back(0);
    }
    const std::pair<std::uint32_t, std::uint32_t> range{begin, begin + count};
    cells.emplace(key, range);
    return range;
  };

  auto escapes = [&](const GPoint& p) {
    for (int a = 0; a < k; ++a)
      if (std::abs(p.x[a]) > shell) return true;
    return levelled && std::abs(p.level) > max_level - 2;
  };

  const int level_offsets[2] = {-1, 1};
  const int n_level_offsets = levelled ? 2 : 1;

  auto finish = [&](std::uint64_t size, bool escaped) {
    ComponentDraw out{size, escaped};
    if (escaped && trunc.escape_action == EscapeAction::count_as_infinite)
      out.size = std::numeric_limits<std::uint64_t>::max();
    return out;
  };

  std::vector<std::uint32_t> queue{0};
  std::uint64_t size = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const GPoint v = pts[queue[head]];
    std::array<int, kMaxGilbertDim> home{};
    for (int a = 0; a < k; ++a) home[a] = static_cast<int>(std::floor(v.x[a]));

    std::array<int, kMaxGilbertDim> offset{};
    for (int a = 0; a < k; ++a) offset[a] = -1;
    for (;;) {
      std::array<int, kMaxGilbertDim + 1> c{};
      bool inside = true;
      for (int a = 0; a < k; ++a) {
        c[a] = home[a] + offset[a];
        if (c[a] < -half_cells || c[a] >= half_cells) inside = false;
      }
      for (int li = 0; inside && li < n_level_offsets; ++li) {
        c[kMaxGilbertDim] = levelled ? v.level + level_offsets[li] : 0;
        if (std::abs(c[kMaxGilbertDim]) > max_level) continue;
        const auto [begin, end] = materialize(c);
        for (std::uint32_t i = begin; i < end; ++i) {
          if (seen[i]) continue;
          double diff[kMaxGilbertDim];
          for (int a = 0; a < k; ++a) diff[a] = pts[i].x[a] - v.x[a];
          if (!shape_contains(shape, diff, pts[i].level - v.level)) continue;
          seen[i] = 1;
          queue.push_back(i);
          ++size;
          if (escapes(pts[i]) || size >= trunc.max_component) return finish(size, true);
        }
      }
      int a = 0;
      while (a < k && offset[a] == 1) offset[a++] = -1;
      if (a == k) break;
      ++offset[a];
    }
  }
  return finish(size, false);
}

namespace {

struct FPartial {
  RunningStats stats;
  std::uint64_t escaped = 0;
  bool infinite = false;
};

FPartial accumulate_f(double lambda, const GilbertShape& shape, const TruncationPolicy& trunc, std::uint64_t seed,
                      std::uint64_t rep_begin, std::uint64_t rep_end, unsigned threads) {
  auto parts = reduce_reps<FPartial>(
      rep_end - rep_begin,
      [&](FPartial& part, std::uint64_t i) {
        const auto draw = gilbert_component_size(lambda, shape, trunc, substream(seed, rep_begin + i));
        if (draw.escaped) {
          ++part.escaped;
          if (trunc.escape_action == EscapeAction::count_as_infinite) {
            part.infinite = true;
            return;
          }
        }
        part.stats.add(static_cast<double>(draw.size - 1));
      },
      threads, 1024);
  FPartial total;
  for (const auto& p : parts) {
    total.stats.merge(p.stats);
    total.escaped += p.escaped;
    total.infinite = total.infinite || p.infinite;
  }
  return total;
}

FEstimate to_estimate(const FPartial& part, std::uint64_t reps) {
  FEstimate out;
  out.value = part.stats.estimate();
  out.value.count = reps;
  if (part.infinite) out.value.mean = std::numeric_limits<double>::infinity();
  out.escape_rate = static_cast<double>(part.escaped) / static_cast<double>(reps);
  out.reliable = out.escape_rate < kMaxEscapeRate;
  return out;
}

}  // namespace

FEstimate f_estimate(double lambda, const GilbertShape& shape, const TruncationPolicy& trunc, std::uint64_t reps,
                     std::uint64_t seed, unsigned threads) {
  require(reps >= 2, "f_estimate: need at least 2 replications");
  return to_estimate(accumulate_f(lambda, shape, trunc, seed, 0, reps, threads), reps);
}

namespace {

// Sign oracle for the noisy bisection: +1 above target, -1 below, 0 when the
// per-probe share of the budget runs out first.
class SignProbe {
 public:
  SignProbe(const GilbertShape& shape, const RootRequest& req) : shape_(shape), req_(req) {}

  int resolve(double lambda) {
    Probe& p = probes_[lambda];
    const std::uint64_t seed = hash2(req_.seed, std::bit_cast<std::uint64_t>(lambda));
    const std::uint64_t per_probe_cap = std::max<std::uint64_t>(req_.initial_reps, req_.budget / 8);
    std::uint64_t batch = p.reps == 0 ? req_.initial_reps : p.reps;
    for (;;) {
      if (p.reps > 0) {
        const auto est = to_estimate(p.part, p.reps);
        // Escapes only happen near or above criticality, far above any target
        // of interest.
        if (!est.reliable) return +1;
        const double z = est.value.z_score(req_.target);
        if (z >= 3.0) return +1;
        if (z <= -3.0) return -1;
        if (p.reps >= per_probe_cap) return 0;
      }
      batch = std::min(batch, per_probe_cap - p.reps);
      if (used_ + batch > req_.budget)
        throw BudgetError("critical_root: replication budget exhausted", lo_, hi_);
      const auto more = accumulate_f(lambda, shape_, req_.trunc, seed, p.reps, p.reps + batch, req_.threads);
      p.part.stats.merge(more.stats);
      p.part.escaped += more.escaped;
      p.reps += batch;
      used_ += batch;
      batch = p.reps;  // doubling
    }
  }

  void set_bracket(double lo, double hi) {
    lo_ = lo;
    hi_ = hi;
  }
  std::uint64_t used() const { return used_; }

 private:
  struct Probe {
    FPartial part;
    std::uint64_t reps = 0;
  };
  GilbertShape shape_;
  RootRequest req_;
  std::map<double, Probe> probes_;
  std::uint64_t used_ = 0;
  double lo_ = 0.0, hi_ = 0.0;
};

}  // namespace

RootResult critical_root(const RootRequest& req) {
  GilbertShape shape;
  double scale = 1.0;
  switch (req.family) {
    case RootFamily::theorem3:
      shape = shape::Cube{2};
      break;
    case RootFamily::theoremA:
      shape = shape::FacePair{};
      scale = 16.0;
      break;
    case RootFamily::cube_d:
      shape = shape::Cube{req.d};
      break;
  }
  validate_shape(shape);
  require(req.target > 0.0, "critical_root: target must be positive");
  require(req.tol > 0.0 && req.tol / scale >= 1e-5, "critical_root: tolerance too small");
  require(req.initial_reps >= 10, "critical_root: initial_reps must be >= 10");

  RootRequest effective = req;
  if (req.family != RootFamily::cube_d) effective.target = 1.0;
  SignProbe probe(shape, effective);
  const double tol = req.tol / scale;
  constexpr double kLambdaUpper = 10.0;

  // f(0) = 0 < target, so lo = 0 is a valid lower end.
  double lo = 0.0;
  double hi = 0.05;
  for (;;) {
    probe.set_bracket(lo, hi);
    const int s = probe.resolve(hi);
    if (s > 0) break;
    if (s < 0) lo = hi;
    hi *= 2.0;
    if (hi > kLambdaUpper) throw BracketError("critical_root: no bracket below lambda = 10");
  }

  while (hi - lo > tol) {
    probe.set_bracket(lo, hi);
    const double mid = 0.5 * (lo + hi);
    const int s = probe.resolve(mid);
    if (s > 0) {
      hi = mid;
    } else if (s < 0) {
      lo = mid;
    } else {
      // The midpoint is statistically at the root; try to certify a bracket
      // of width tol around it.
      const double a = std::max(lo, mid - 0.5 * tol);
      const double b = std::min(hi, mid + 0.5 * tol);
      const int sa = a == lo ? -1 : probe.resolve(a);
      const int sb = b == hi ? +1 : probe.resolve(b);
      if (sa < 0 && sb > 0) {
        lo = a;
        hi = b;
        break;
      }
      if (sa > 0) {
        hi = a;
      } else if (sb < 0) {
        lo = b;
      } else {
        throw BudgetError("critical_root: could not resolve the sign near the root", lo * scale, hi * scale);
      }
    }
  }
  RootResult out;
  out.root = 0.5 * (lo + hi) * scale;
  out.ci_low = lo * scale;
  out.ci_high = hi * scale;
  out.growths = probe.used();
  return out;
}

LambdaDr lambda_dr(int d, int r, double tol, std::uint64_t seed, unsigned threads) {
  require(d >= 2 && r >= 1 && r <= d - 1, "lambda_dr: need d >= 2 and 1 <= r <= d-1");
  LambdaDr out;
  if (r == 1) {
    // (d - 1) * 2 (e^lambda - 1) = 1
    out.value = std::log((2.0 * d - 1.0) / (2.0 * d - 2.0));
    out.ci_low = out.ci_high = out.value;
    out.closed_form = true;
    return out;
  }
  require(r <= kMaxGilbertDim, "lambda_dr: r > 4 is not supported");
  double subspaces = 1.0;  // C(d, r)
  for (int i = 1; i <= r; ++i) subspaces = subspaces * (d - r + i) / i;
  RootRequest req;
  req.family = RootFamily::cube_d;
  req.d = r;
  req.target = 1.0 / (subspaces - 1.0);
  req.tol = tol;
  req.seed = seed;
  req.threads = threads;
  const auto root = critical_root(req);
  out.value = root.root;
  out.ci_low = root.ci_low;
  out.ci_high = root.ci_high;
  return out;
}

bool square_gilbert_crosses(double lambda, double lambda_hi, double side, std::uint64_t seed) {
  require(lambda > 0.0 && lambda <= lambda_hi, "square_gilbert_crosses: need 0 < lambda <= lambda_hi");
  require(side > 2.0, "square_gilbert_crosses: side must exceed 2");
  SplitMix64 rng(seed);
  const auto count =
      static_cast<std::uint64_t>(std::poisson_distribution<std::int64_t>(lambda_hi * side * side)(rng));
  const double keep = lambda / lambda_hi;
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(static_cast<double>(count) * keep * 1.1) + 8);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double x = rng.uniform() * side;
    const double y = rng.uniform() * side;
    if (rng.uniform() < keep) pts.push_back({x, y});
  }

  const int cells = static_cast<int>(std::ceil(side));
  std::vector<std::vector<std::uint32_t>> grid(static_cast<std::size_t>(cells) * cells);
  auto cell_of = [&](double v) { return std::min(cells - 1, static_cast<int>(v)); };
  for (std::uint32_t i = 0; i < pts.size(); ++i)
    grid[static_cast<std::size_t>(cell_of(pts[i][1])) * cells + cell_of(pts[i][0])].push_back(i);

  UnionFind uf(pts.size());
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    const int cx = cell_of(pts[i][0]), cy = cell_of(pts[i][1]);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = cx + dx, ny = cy + dy;
        if (nx < 0 || ny < 0 || nx >= cells || ny >= cells) continue;
        for (std::uint32_t j : grid[static_cast<std::size_t>(ny) * cells + nx]) {
          if (j <= i) continue;
          if (std::abs(pts[i][0] - pts[j][0]) <= 1.0 && std::abs(pts[i][1] - pts[j][1]) <= 1.0) uf.unite(i, j);
        }
      }
    }
  }
  std::unordered_map<std::uint32_t, std::uint8_t> touch;
  for (std::uint32_t i = 0; i < pts.size(); ++i) {
    std::uint8_t flags = 0;
    if (pts[i][0] < 1.0) flags |= 1;
    if (pts[i][0] > side - 1.0) flags |= 2;
    if (!flags) continue;
    auto& t = touch[uf.find(i)];
    t |= flags;
    if (t == 3) return true;
  }
  return false;
}

CriticalAreaEstimate square_critical_area(double side, std::uint64_t reps, std::uint64_t seed, unsigned threads) {
  require(reps >= 10, "square_critical_area: reps must be >= 10");
  constexpr double kLambdaHi = 2.0;
  auto frequency = [&](double lambda) {
    auto parts = reduce_reps<std::uint64_t>(
        reps,
        [&](std::uint64_t& hits, std::uint64_t rep) {
          hits += square_gilbert_crosses(lambda, kLambdaHi, side, substream(seed, rep)) ? 1 : 0;
        },
        threads, 4);
    std::uint64_t hits = 0;
    for (auto h : parts) hits += h;
    return static_cast<double>(hits) / static_cast<double>(reps);
  };
  double lo = 0.5, hi = kLambdaHi;
  if (frequency(lo) >= 0.5 || frequency(hi) < 0.5)
    throw BracketError("square_critical_area: crossing frequency does not bracket 1/2");
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    (frequency(mid) >= 0.5 ? hi : lo) = mid;
  }
  CriticalAreaEstimate out;
  out.lambda_c = 0.5 * (lo + hi);
  const double h = 0.03;
  const double slope = (frequency(std::min(kLambdaHi, out.lambda_c + h)) - frequency(out.lambda_c - h)) / (2 * h);
  const double se = slope > 0 ? std::sqrt(0.25 / static_cast<double>(reps)) / slope : h;
  out.area = 4.0 * out.lambda_c;
  out.ci_low = 4.0 * (out.lambda_c - 1.96 * se);
  out.ci_high = 4.0 * (out.lambda_c + 1.96 * se);
  return out;
}

}  // namespace losp

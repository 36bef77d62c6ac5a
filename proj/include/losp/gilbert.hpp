#pragma once

// Gilbert graphs G(lambda, S): a rate-lambda Poisson process plus the origin,
// two vertices joined when their difference lies in the symmetric set S.
// All shapes here sit inside the unit sup-norm ball, which the neighbour
// search relies on.

#include <cstdint>
#include <string>
#include <variant>

#include "losp/stats.hpp"

namespace losp {

namespace shape {
struct Segment {};            // [-1,1] in R
struct Cube { int d = 2; };   // [-1,1]^d
struct Cross2D { double eps = 0.1; };        // [-1,1]x[-e,e] u [-e,e]x[-1,1]
struct SquareAnnulus { double eps = 0.1; };  // [-1,1]^2 minus (-(1-e),1-e)^2
struct FacePair {};           // [-1,1]^2 x {-1,1} in R^2 x Z
}  // namespace shape

using GilbertShape =
    std::variant<shape::Segment, shape::Cube, shape::Cross2D, shape::SquareAnnulus, shape::FacePair>;

inline constexpr int kMaxGilbertDim = 4;

void validate_shape(const GilbertShape& s);
std::string shape_name(const GilbertShape& s);
/// Continuous dimension of the ambient space (FacePair also has a Z factor).
int continuous_dim(const GilbertShape& s);
bool has_levels(const GilbertShape& s);
/// Lebesgue measure of S (counting measure on the Z factor for FacePair).
double shape_measure(const GilbertShape& s);
/// Membership of the difference vector (continuous part, integer level part).
bool shape_contains(const GilbertShape& s, const double* diff, int level_diff);

enum class EscapeAction { censor_and_flag, count_as_infinite };

struct TruncationPolicy {
  double box_half_width = 50.0;
  EscapeAction escape_action = EscapeAction::censor_and_flag;
  std::uint64_t max_component = 100'000;
  int levels = 50;  // FacePair: integer levels -levels..levels

  void validate() const;
};

struct ComponentDraw {
  std::uint64_t size = 1;  // |C_0| including the origin
  bool escaped = false;    // touched the outer shell or hit max_component
};

/// Grows the origin's component by breadth-first search. Poisson points are
/// generated lazily per unit cell from (seed, cell), so the work scales with
/// the component, not the window.
ComponentDraw gilbert_component_size(double lambda, const GilbertShape& shape,
                                     const TruncationPolicy& trunc, std::uint64_t seed);

inline constexpr double kMaxEscapeRate = 1e-3;

struct FEstimate {
  MeanEstimate value;  // mean of |C_0| - 1
  double escape_rate = 0.0;
  bool reliable = true;  // escape_rate < kMaxEscapeRate
};

FEstimate f_estimate(double lambda, const GilbertShape& shape, const TruncationPolicy& trunc,
                     std::uint64_t reps, std::uint64_t seed, unsigned threads = 0);

enum class RootFamily {
  theorem3,  // f_2(lambda) = 1 for the square; reports lambda
  theoremA,  // f_F(lambda) = 1 for the face pair; reports 16 lambda (2 mu, mu = 8 lambda)
  cube_d,    // f_d(lambda) = target for the cube [-1,1]^d; reports lambda
};

struct RootRequest {
  RootFamily family = RootFamily::theorem3;
  int d = 2;
  double target = 1.0;
  double tol = 4e-3;  // in the reported units
  std::uint64_t seed = 1;
  std::uint64_t initial_reps = 2'000;
  std::uint64_t budget = 100'000'000;  // total component growths
  TruncationPolicy trunc{};
  unsigned threads = 0;
};

struct RootResult {
  double root = 0.0;  // reported units
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t growths = 0;
};

/// Noisy bisection on lambda -> f(lambda) - target. Each probe adds
/// replications until its sign is resolved at 3 standard errors; the returned
/// interval has both endpoints resolved, so it combines bisection width and
/// Monte Carlo error. Throws BracketError / BudgetError.
RootResult critical_root(const RootRequest& request);

struct LambdaDr {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool closed_form = false;
};

/// Limit of omega^r p_c(d, r, omega): the root of (C(d,r) - 1) f_r = 1.
LambdaDr lambda_dr(int d, int r, double tol, std::uint64_t seed, unsigned threads = 0);

/// True if one component of G(lambda, [-1,1]^2) restricted to [0,side]^2
/// meets both the strips x < 1 and x > side - 1. Points are thinned from a
/// rate-lambda_hi sample, coupling all lambda <= lambda_hi monotonically.
bool square_gilbert_crosses(double lambda, double lambda_hi, double side, std::uint64_t seed);

struct CriticalAreaEstimate {
  double lambda_c = 0.0;
  double area = 0.0;  // 4 lambda_c
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Crossing-frequency 1/2 point of the square Gilbert model in a finite window.
CriticalAreaEstimate square_critical_area(double side, std::uint64_t reps, std::uint64_t seed,
                                          unsigned threads = 0);

}  // namespace losp

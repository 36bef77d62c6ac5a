#pragma once

// Unit-gap probabilities of a Poisson process on an interval, the mean reach
// count on a circle, and the line-of-sight integral operators
//
//   (T f)(x')        = int_0^C lambda r(|x - x'|) f(x) dx
//   (T2 f)(x', y')   = int int lambda^2 r(|x - x'|) r(|y - y'|) f(x, y) dx dy
//
// discretized on a uniform midpoint grid of [0, C].

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "losp/errors.hpp"

namespace losp {

struct GapLaw {
  double g = 0.0;  // P(some unit subinterval of [0,d] is empty)
  double r = 1.0;  // 1 - g
};

/// Exact gap law of a rate-lambda Poisson process on [0, d]; g = 0 for d <= 1.
GapLaw gap_prob(double lambda, double d);

struct TorusMeanZ {
  double value = 0.0;    // lambda * int_0^C (1 - g(x) g(C - x)) dx
  double literal = 0.0;  // the same integral without the factor lambda
  int nodes = 0;         // midpoint nodes at the accepted refinement
};

/// Mean reach count E Z(lambda, C). The integrand jumps at x = 1 and x = C-1,
/// so the midpoint rule is applied on each smooth piece and the node count
/// doubled from `quadrature_m` until the relative change is below 1e-6.
TorusMeanZ torus_mean_Z(double lambda, double circumference, int quadrature_m = 64);

/// Cell-averaged quadrature matrix of T on m midpoint cells of [0, C]:
/// A_ij = lambda h <r(|x - x'|)>_{cell i x cell j}. Toeplitz and symmetric.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> kernel_matrix(Scalar lambda, Scalar circumference,
                                                                    Eigen::Index m, int sub = 16) {
  require(m >= 16, "kernel_matrix: need m >= 16");
  require(lambda >= 0 && circumference > 0, "kernel_matrix: need lambda >= 0 and C > 0");
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Scalar h = circumference / static_cast<Scalar>(m);
  // Average of r over a pair of cells k apart: the offset between two
  // sub-points is (k + (a - b)/sub) h, weighted by sub - |a - b|.
  Vec band(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    // r jumps at distance 1; sample the bands that straddle it more finely.
    const bool straddles = std::abs(static_cast<Scalar>(k) * h - Scalar(1)) < h;
    const int s = straddles ? 64 * sub : sub;
    Scalar acc = 0;
    for (int t = -(s - 1); t <= s - 1; ++t) {
      const Scalar dist = std::abs((static_cast<Scalar>(k) + static_cast<Scalar>(t) / s) * h);
      const Scalar r = lambda > 0 ? static_cast<Scalar>(gap_prob(static_cast<double>(lambda),
                                                                 static_cast<double>(dist)).r)
                                  : Scalar(1);
      acc += static_cast<Scalar>(s - std::abs(t)) * r;
    }
    band(k) = lambda * h * acc / static_cast<Scalar>(s) / static_cast<Scalar>(s);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = band(std::abs(i - j));
  return a;
}

template <typename Scalar>
struct PowerResult {
  Scalar eigenvalue = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;  // unit 2-norm, nonnegative
  int iterations = 0;
};

/// Dominant eigenpair of a symmetric nonnegative matrix, started from the
/// all-ones vector. Stops when ||A v - mu v|| <= tol * |mu|.
template <typename Derived>
PowerResult<typename Derived::Scalar> power_iteration(const Eigen::MatrixBase<Derived>& a,
                                                      typename Derived::Scalar tol = 1e-10,
                                                      int max_iterations = 100'000) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  require(a.rows() == a.cols() && a.rows() > 0, "power_iteration: need a nonempty square matrix");
  PowerResult<Scalar> out;
  Vec v = Vec::Ones(a.rows()).normalized();
  Vec av(a.rows());
  for (int it = 1; it <= max_iterations; ++it) {
    av.noalias() = a * v;
    const Scalar mu = v.dot(av);
    const Scalar residual = (av - mu * v).norm();
    if (mu == Scalar(0) || residual <= tol * std::abs(mu)) {
      out.eigenvalue = mu;
      out.vector = v;
      out.iterations = it;
      return out;
    }
    v = av.normalized();
  }
  throw BudgetError("power_iteration: no convergence");
}

struct OperatorNorm {
  double normT = 0.0;
  double normT2 = 0.0;
  Eigen::VectorXd psi;  // top eigenvector of T at the nodes, unit 2-norm
  double product_residual = 0.0;  // ||T2 phi - normT^2 phi|| / ||phi||, phi = psi (x) psi
  bool explicit_T2 = false;       // normT2 from the assembled m^2 x m^2 matrix
};

inline constexpr Eigen::Index kMaxExplicitT2 = 64;

/// Norms of T and T2. For m <= 64 the product-kernel matrix is assembled and
/// iterated independently; above that normT2 is reported as normT^2 and the
/// residual is evaluated through the Kronecker structure.
OperatorNorm operator_norm(double lambda, double circumference, int m);

enum class CriticalMode { torus_meanZ, operator_norm };

struct CriticalIntensity {
  double lambda = 0.0;
  int evaluations = 0;
};

/// Root of E Z(lambda, C) = 1 or ||T|| = 1 in (0, 10] by Illinois false
/// position, to `tol` in lambda. Throws BracketError when 10 is not enough.
CriticalIntensity solve_critical_intensity(CriticalMode mode, double circumference, double tol = 1e-6,
                                           int m = 128);

}  // namespace losp

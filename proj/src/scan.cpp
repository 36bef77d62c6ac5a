#include "losp/scan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace losp {

GapLaw gap_prob(double lambda, double d) {
  require(lambda > 0.0, "gap_prob: lambda must be positive");
  require(d >= 0.0, "gap_prob: d must be nonnegative");
  if (d <= 1.0) return {0.0, 1.0};

  // Given k uniform points on [0,d] the k+1 spacings are exchangeable and
  // P(some spacing >= 1) = sum_{j>=1} (-1)^(j+1) C(k+1,j) (1 - j/d)_+^k.
  const long double mean = static_cast<long double>(lambda) * d;
  const int max_j = static_cast<int>(std::ceil(d)) - 1;  // j < d
  const long double log_mean = std::log(mean);
  const long double spread = std::sqrt(mean);
  long double g = 0.0L, mass = 0.0L;
  for (long k = 0;; ++k) {
    const long double kk = static_cast<long double>(k);
    const long double log_pmf = -mean + kk * log_mean - std::lgamma(kk + 1.0L);
    const long double pmf = std::exp(log_pmf);
    long double gk = 0.0L;
    long double log_binom = 0.0L;  // log C(k+1, j)
    for (int j = 1; j <= max_j && j <= k + 1; ++j) {
      log_binom += std::log((kk + 2.0L - j) / j);
      const long double base = 1.0L - static_cast<long double>(j) / d;
      const long double term = std::exp(log_binom + kk * std::log(base));
      gk += (j % 2 == 1) ? term : -term;
    }
    gk = std::clamp(gk, 0.0L, 1.0L);
    g += pmf * gk;
    mass += pmf;
    if (kk > mean + 12.0L * spread + 20.0L && pmf < 1e-16L) break;
    if (1.0L - mass < 1e-13L && kk > mean) break;
  }
  const double gd = static_cast<double>(std::clamp(g, 0.0L, 1.0L));
  return {gd, 1.0 - gd};
}

TorusMeanZ torus_mean_Z(double lambda, double circumference, int quadrature_m) {
  require(lambda >= 0.0, "torus_mean_Z: lambda must be nonnegative");
  require(circumference > 0.0, "torus_mean_Z: C must be positive");
  require(quadrature_m >= 1, "torus_mean_Z: need at least one node");
  TorusMeanZ out;
  out.nodes = quadrature_m;
  const double c = circumference;
  if (lambda == 0.0) {
    out.literal = c;
    return out;
  }
  if (c <= 2.0) {
    // min(x, C-x) <= 1 everywhere, so one of the gap factors vanishes.
    out.value = lambda * c;
    out.literal = c;
    return out;
  }
  // On [0,1] and [C-1,C] the integrand is 1; only (1, C-1) needs quadrature.
  const double a = 1.0, b = c - 1.0;
  auto middle = [&](int m) {
    const double h = (b - a) / m;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
      const double x = a + (i + 0.5) * h;
      sum += 1.0 - gap_prob(lambda, x).g * gap_prob(lambda, c - x).g;
    }
    return sum * h;
  };
  int m = quadrature_m;
  double prev = 2.0 + middle(m);
  for (;;) {
    m *= 2;
    const double cur = 2.0 + middle(m);
    if (std::abs(cur - prev) <= 1e-6 * std::abs(cur) || m >= (1 << 20)) {
      out.literal = cur;
      out.value = lambda * cur;
      out.nodes = m;
      return out;
    }
    prev = cur;
  }
}

OperatorNorm operator_norm(double lambda, double circumference, int m) {
  require(m >= 16, "operator_norm: need m >= 16");
  require(lambda >= 0.0 && circumference > 0.0, "operator_norm: need lambda >= 0 and C > 0");
  const Eigen::MatrixXd a = kernel_matrix<double>(lambda, circumference, m);
  OperatorNorm out;
  if (lambda == 0.0) {
    out.psi = Eigen::VectorXd::Ones(m).normalized();
    return out;
  }
  const auto top = power_iteration(a);
  out.normT = top.eigenvalue;
  out.psi = top.vector;

  Eigen::VectorXd phi(static_cast<Eigen::Index>(m) * m);
  for (Eigen::Index i = 0; i < m; ++i) phi.segment(i * m, m) = out.psi(i) * out.psi;
  const double target = out.normT * out.normT;
  if (m <= kMaxExplicitT2) {
    const Eigen::Index mm = static_cast<Eigen::Index>(m) * m;
    Eigen::MatrixXd t2(mm, mm);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) t2.block(i * m, j * m, m, m) = a(i, j) * a;
    out.normT2 = power_iteration(t2).eigenvalue;
    out.product_residual = (t2 * phi - target * phi).norm() / phi.norm();
    out.explicit_T2 = true;
  } else {
    const Eigen::VectorXd apsi = a * out.psi;
    Eigen::VectorXd t2phi(static_cast<Eigen::Index>(m) * m);
    for (Eigen::Index i = 0; i < m; ++i) t2phi.segment(i * m, m) = apsi(i) * apsi;
    out.normT2 = target;
    out.product_residual = (t2phi - target * phi).norm() / phi.norm();
  }
  return out;
}

CriticalIntensity solve_critical_intensity(CriticalMode mode, double circumference, double tol, int m) {
  require(circumference > 0.0, "solve_critical_intensity: C must be positive");
  require(tol >= 1e-6, "solve_critical_intensity: tol must be >= 1e-6");
  CriticalIntensity out;
  std::function<double(double)> excess;
  if (mode == CriticalMode::torus_meanZ) {
    excess = [&](double lambda) { return torus_mean_Z(lambda, circumference).value - 1.0; };
  } else {
    require(m >= 16, "solve_critical_intensity: need m >= 16");
    excess = [&](double lambda) {
      return power_iteration(kernel_matrix<double>(lambda, circumference, m)).eigenvalue - 1.0;
    };
  }
  constexpr double kLambdaMax = 10.0;
  double a = 0.0, fa = -1.0;  // both criteria vanish at lambda = 0
  double b = kLambdaMax, fb = excess(b);
  out.evaluations = 1;
  if (fb <= 0.0) throw BracketError("solve_critical_intensity: no root in (0, 10]");

  int side = 0;  // Illinois: halve the stale end's value when it repeats
  double width = b - a;
  for (int it = 0; it < 500 && b - a > tol; ++it) {
    double c = b - fb * (b - a) / (fb - fa);
    // Fall back to bisection when false position stalls.
    if (it % 3 == 2 && b - a > 0.5 * width) c = 0.5 * (a + b);
    if (it % 3 == 2) width = b - a;
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = excess(c);
    ++out.evaluations;
    if (fc == 0.0) {
      out.lambda = c;
      return out;
    }
    if (fc < 0.0) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  out.lambda = 0.5 * (a + b);
  return out;
}

}  // namespace losp

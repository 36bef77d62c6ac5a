#include "losp/stats.hpp"

#include <cmath>
#include <limits>

#include "losp/errors.hpp"

namespace losp {

double MeanEstimate::z_score(double value) const {
  const double diff = mean - value;
  if (std_error > 0.0) return diff / std_error;
  if (diff == 0.0) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
}

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * nb / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

double RunningStats::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

MeanEstimate RunningStats::estimate() const {
  MeanEstimate e;
  e.mean = mean_;
  e.count = n_;
  e.std_error = n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  return e;
}

MeanEstimate proportion(std::uint64_t successes, std::uint64_t trials) {
  require(trials > 0, "proportion: zero trials");
  MeanEstimate e;
  e.count = trials;
  e.mean = static_cast<double>(successes) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
  return e;
}

double combined_stderr(const MeanEstimate& a, const MeanEstimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "linear_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "linear_fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace losp

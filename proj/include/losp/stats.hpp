#pragma once

#include <cstdint>
#include <span>

namespace losp {

/// Sample mean with its standard error.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t count = 0;

  /// Signed distance from `value` in standard errors (inf when stderr is 0
  /// and the mean differs).
  double z_score(double value) const;
};

/// Welford accumulator; mergeable so per-task partials combine in task order.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  MeanEstimate estimate() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Binomial proportion successes/trials with stderr sqrt(p(1-p)/n).
MeanEstimate proportion(std::uint64_t successes, std::uint64_t trials);

/// Standard error of the difference of two independent estimates.
double combined_stderr(const MeanEstimate& a, const MeanEstimate& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace losp

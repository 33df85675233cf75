#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evbet/domain.hpp"
#include "evbet/error.hpp"

namespace evbet {

// Additive slack allowed on two-point expectations when certifying validity.
inline constexpr double kValidityTol = 1e-12;

// I_mu = [1/(mu-1), 1/mu]: the bets that keep 1 + lambda (x - mu) >= 0 on [0,1].
struct BetRange {
  double lo;
  double hi;

  explicit BetRange(double mu) : lo(1.0 / (mu - 1.0)), hi(1.0 / mu) {
    if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
  }

  bool contains(double lambda) const { return lambda >= lo && lambda <= hi; }
  double clamp(double lambda) const { return std::clamp(lambda, lo, hi); }
  double width() const { return hi - lo; }
};

template <class E>
concept PointwisePayoff = requires(const E& e, double x) {
  { e(x) } -> std::convertible_to<double>;
};

class CoinBetEVariable {
 public:
  CoinBetEVariable(double mu, double lambda) : mu_(mu), lambda_(lambda) {
    if (!BetRange(mu).contains(lambda))
      throw OutOfRange("bet " + std::to_string(lambda) + " outside I_mu for mu=" + std::to_string(mu));
  }

  double mu() const { return mu_; }
  double lambda() const { return lambda_; }

  double operator()(double x) const { return std::max(0.0, 1.0 + lambda_ * (x - mu_)); }

 private:
  double mu_;
  double lambda_;
};

class HoeffdingEVariable {
 public:
  HoeffdingEVariable(double mu, double alpha) : mu_(mu), alpha_(alpha) {
    if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
    if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
  }

  double mu() const { return mu_; }
  double alpha() const { return alpha_; }

  double operator()(double x) const { return std::exp(alpha_ * (x - mu_) - alpha_ * alpha_ / 8.0); }

 private:
  double mu_;
  double alpha_;
};

inline double eval_coinbet(const CoinBetEVariable& e, double x) { return e(x); }
inline double eval_hoeffding(const HoeffdingEVariable& e, double x) { return e(x); }

// F_mu, the pointwise supremum of all e-variables for the mean-mu null.
inline double eval_majorizer(double mu, double x) {
  if (x >= mu) return x / mu;
  return (1.0 - x) / (1.0 - mu);
}

// Slope of the secant through the Hoeffding payoff at x = 0 and x = 1. The
// coin-bet with this slope runs parallel to the secant and passes through
// (mu, 1), which lies above it, so it majorises the convex Hoeffding curve.
inline double dominating_lambda(double mu, double alpha) {
  const HoeffdingEVariable h(mu, alpha);
  return BetRange(mu).clamp(h(1.0) - h(0.0));
}

// E-variable given by its values on a finite grid.
class TabulatedEVariable {
 public:
  TabulatedEVariable(SampleSpace space, std::vector<double> values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (values_.size() != space_.size()) throw InvalidArgument("one value per grid point is required");
    for (double v : values_)
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("tabulated e-variable values must be finite and >= 0");
  }

  template <PointwisePayoff F>
  static TabulatedEVariable tabulate(const SampleSpace& space, const F& f) {
    std::vector<double> v;
    v.reserve(space.size());
    for (double x : space.points()) v.push_back(f(x));
    return TabulatedEVariable(space, std::move(v));
  }

  const SampleSpace& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }
  double mu() const { return space_.mu(); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  SampleSpace space_;
  std::vector<double> values_;
};

struct ValidityReport {
  bool valid = true;
  // Largest expectation over the extreme points of the null.
  double max_expectation = 0.0;
  // Measure attaining max_expectation; set whenever the report is invalid.
  std::optional<TwoPointMeasure> witness;
  double witness_expectation = 0.0;
};

namespace detail {

// Maximises sum_y Q(y) values[y] over the two-point mean-mu measures on the
// grid (and the point mass at mu when mu is a grid point). The point mass is
// tried first so it wins ties.
inline std::pair<TwoPointMeasure, double> best_two_point(const SampleSpace& space, const std::vector<double>& values) {
  const double mu = space.mu();
  TwoPointMeasure best{};
  double best_value = -std::numeric_limits<double>::infinity();
  if (auto m = space.index_of(mu)) {
    best = {space[*m], space[*m], 1.0};
    best_value = values[*m];
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double a = space[i];
    if (a >= mu || space.is_mu(a)) break;
    for (std::size_t j = space.size(); j-- > 0;) {
      const double b = space[j];
      if (b <= mu || space.is_mu(b)) break;
      const double w = two_point_weight(a, b, mu);
      const double v = w * values[i] + (1.0 - w) * values[j];
      if (v > best_value) {
        best_value = v;
        best = {a, b, w};
      }
    }
  }
  return {best, best_value};
}

}  // namespace detail

// Validity against the mean-mu null restricted to grid-supported measures.
// Two-point measures straddling mu are the extreme points of that set, so
// checking them (plus the point mass at mu) is exhaustive.
inline ValidityReport check_evariable(const TabulatedEVariable& e) {
  auto [measure, value] = detail::best_two_point(e.space(), e.values());
  ValidityReport r;
  r.max_expectation = value;
  r.valid = value <= 1.0 + kValidityTol;
  if (!r.valid) {
    r.witness = measure;
    r.witness_expectation = value;
  }
  return r;
}

class NotAnEVariable : public Error {
 public:
  explicit NotAnEVariable(ValidityReport report)
      : Error("table is not an e-variable: a two-point measure has expectation " +
              std::to_string(report.witness_expectation)),
        report_(std::move(report)) {}

  const ValidityReport& report() const { return report_; }

 private:
  ValidityReport report_;
};

struct DominationCertificate {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double lambda_hat = 0.0;
};

// Certificate from raw grid values without a validity check. beta0 is the
// largest bet that stays above the table left of mu, beta1 the smallest one
// that stays above it right of mu. Should rounding leave beta1 > beta0, both
// collapse to their midpoint.
inline DominationCertificate beta_bounds(const SampleSpace& space, const std::vector<double>& values) {
  const double mu = space.mu();
  const BetRange range(mu);
  double beta0 = range.hi;
  double beta1 = range.lo;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double x = space[i];
    if (space.is_mu(x)) continue;
    const double slope = (values[i] - 1.0) / (x - mu);
    if (x < mu)
      beta0 = std::min(beta0, slope);
    else
      beta1 = std::max(beta1, slope);
  }
  beta0 = range.clamp(beta0);
  beta1 = range.clamp(beta1);
  if (beta1 > beta0) beta0 = beta1 = 0.5 * (beta0 + beta1);
  return {beta0, beta1, 0.5 * (beta0 + beta1)};
}

// Coin-bet dominating a valid tabulated e-variable.
inline DominationCertificate beta_interval(const TabulatedEVariable& e) {
  auto report = check_evariable(e);
  if (!report.valid) throw NotAnEVariable(std::move(report));
  return beta_bounds(e.space(), e.values());
}

}  // namespace evbet

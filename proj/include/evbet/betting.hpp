#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/evariables.hpp"

namespace evbet {

// Anything that proposes a bet before seeing the next observation and then
// learns from it.
template <class S>
concept BettingStrategy = requires(S& s, const S& cs, double x) {
  { cs.bet() } -> std::convertible_to<double>;
  s.observe(x);
};

inline constexpr std::size_t kDefaultPortfolioNodes = 1001;

// Posterior over bet fractions on an equispaced grid spanning I_mu, kept in
// log space. A node whose wealth hit zero carries -inf and stays there.
struct PortfolioPosterior {
  std::vector<double> lambda_grid;
  std::vector<double> log_weights;

  // Uniform prior on I_mu. k must be odd so the composite Simpson rule applies.
  static PortfolioPosterior uniform(double mu, std::size_t k = kDefaultPortfolioNodes) {
    if (k < 3 || k % 2 == 0) throw InvalidArgument("portfolio grid size must be odd and >= 3");
    const BetRange range(mu);
    PortfolioPosterior p;
    p.lambda_grid.resize(k);
    const double h = range.width() / static_cast<double>(k - 1);
    for (std::size_t i = 0; i < k; ++i) p.lambda_grid[i] = range.lo + h * static_cast<double>(i);
    p.lambda_grid.front() = range.lo;
    p.lambda_grid.back() = range.hi;
    p.log_weights.assign(k, 0.0);
    return p;
  }

  std::size_t size() const { return lambda_grid.size(); }
};

// log(1 + lambda (x - mu)), or log(1 + lambda x) for the uncentred variant.
// Factors within a few ulps of zero are treated as exact wipe-outs.
inline double log_wealth_factor(double lambda, double x, double mu, bool raw = false) {
  const double f = raw ? 1.0 + lambda * x : 1.0 + lambda * (x - mu);
  if (f <= 4.0 * std::numeric_limits<double>::epsilon()) return -std::numeric_limits<double>::infinity();
  return std::log(f);
}

inline PortfolioPosterior up_update(PortfolioPosterior p, double x, double mu, bool raw = false) {
  for (std::size_t k = 0; k < p.size(); ++k) p.log_weights[k] += log_wealth_factor(p.lambda_grid[k], x, mu, raw);
  return p;
}

// Posterior mean of lambda by composite Simpson quadrature on the node grid.
inline double up_bet(const PortfolioPosterior& p) {
  const std::size_t k = p.size();
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : p.log_weights) top = std::max(top, lw);
  if (!(top > -std::numeric_limits<double>::infinity())) throw DegeneratePosterior("all portfolio weights vanished");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double rel = p.log_weights[i] - top;
    // exp underflows to exactly zero below this, so skipping is lossless.
    if (rel < -746.0) continue;
    const double simpson = (i == 0 || i + 1 == k) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double w = simpson * std::exp(rel);
    num += w * p.lambda_grid[i];
    den += w;
  }
  return std::clamp(num / den, p.lambda_grid.front(), p.lambda_grid.back());
}

// Fixed bet, whatever the history.
class ConstantBet {
 public:
  ConstantBet(double mu, double lambda) : lambda_(lambda) {
    if (!BetRange(mu).contains(lambda))
      throw OutOfRange("constant bet " + std::to_string(lambda) + " outside I_mu for mu=" + std::to_string(mu));
  }
  double bet() const { return lambda_; }
  void observe(double) {}

 private:
  double lambda_;
};

inline double constant_bet(double mu, double lambda) { return ConstantBet(mu, lambda).bet(); }

// Bayesian mixture over coin-bets: bet the posterior mean of lambda, with each
// node reweighted by the wealth it would have earned.
//
// The log weights are the reference state. For speed the bet is computed from
// a linear-space mirror that is multiplied by cached factors each round and
// re-derived from the log weights every kRefreshEvery rounds, or sooner if its
// mass drifts far from 1. Agreement with up_bet on the log weights is to
// rounding (relative ~1e-13), not bit-for-bit.
class UniversalPortfolio {
 public:
  explicit UniversalPortfolio(double mu, std::size_t nodes = kDefaultPortfolioNodes, bool raw = false)
      : mu_(mu), raw_(raw), posterior_(PortfolioPosterior::uniform(mu, nodes)) {
    refresh();
  }

  double bet() const { return bet_; }

  void observe(double x) {
    const Factors& f = factors_for(x);
    for (std::size_t k = 0; k < f.log.size(); ++k) posterior_.log_weights[k] += f.log[k];
    if (++since_refresh_ >= kRefreshEvery) {
      refresh();
      return;
    }
    for (std::size_t k = 0; k < f.lin.size(); ++k) linear_[k] *= f.lin[k];
    if (!mirror_bet()) refresh();
  }

  const PortfolioPosterior& posterior() const { return posterior_; }
  double mu() const { return mu_; }
  bool raw() const { return raw_; }

 private:
  struct Factors {
    std::vector<double> log;
    std::vector<double> lin;
  };

  // Data from discrete laws repeat a handful of values; memoise their factor
  // vectors. Log values match up_update exactly.
  const Factors& factors_for(double x) {
    for (const auto& [v, f] : cache_)
      if (v == x) return f;
    Factors f;
    f.log.resize(posterior_.size());
    f.lin.resize(posterior_.size());
    for (std::size_t k = 0; k < f.log.size(); ++k) {
      f.log[k] = log_wealth_factor(posterior_.lambda_grid[k], x, mu_, raw_);
      f.lin[k] = std::exp(f.log[k]);
    }
    if (cache_.size() >= kCacheSize) cache_.erase(cache_.begin());
    cache_.emplace_back(x, std::move(f));
    return cache_.back().second;
  }

  void refresh() {
    since_refresh_ = 0;
    double top = -std::numeric_limits<double>::infinity();
    for (double lw : posterior_.log_weights) top = std::max(top, lw);
    if (!(top > -std::numeric_limits<double>::infinity())) throw DegeneratePosterior("all portfolio weights vanished");
    linear_.resize(posterior_.size());
    for (std::size_t k = 0; k < linear_.size(); ++k) {
      const double rel = posterior_.log_weights[k] - top;
      linear_[k] = rel < -746.0 ? 0.0 : std::exp(rel);
    }
    mirror_bet();
  }

  // Simpson posterior mean over the mirror; false when its mass left the
  // safe range and a refresh is due.
  bool mirror_bet() {
    const std::size_t k = linear_.size();
    double num = linear_[0] * posterior_.lambda_grid[0] + linear_[k - 1] * posterior_.lambda_grid[k - 1];
    double den = linear_[0] + linear_[k - 1];
    for (std::size_t i = 1; i + 1 < k; ++i) {
      const double w = (i % 2 == 1 ? 4.0 : 2.0) * linear_[i];
      num += w * posterior_.lambda_grid[i];
      den += w;
    }
    if (!(den > 1e-200 && den < 1e200)) return false;
    bet_ = std::clamp(num / den, posterior_.lambda_grid.front(), posterior_.lambda_grid.back());
    return true;
  }

  static constexpr std::size_t kCacheSize = 16;
  static constexpr std::size_t kRefreshEvery = 64;

  double mu_;
  bool raw_;
  PortfolioPosterior posterior_;
  std::vector<double> linear_;
  double bet_ = 0.0;
  std::size_t since_refresh_ = 0;
  std::vector<std::pair<double, Factors>> cache_;
};

// Predetermined bet sequence; the last entry repeats once it runs out.
class ScheduledBet {
 public:
  ScheduledBet(double mu, std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw InvalidArgument("bet schedule must not be empty");
    const BetRange range(mu);
    for (double l : lambdas_)
      if (!range.contains(l)) throw OutOfRange("scheduled bet " + std::to_string(l) + " outside I_mu");
  }
  double bet() const { return lambdas_[std::min(round_, lambdas_.size() - 1)]; }
  void observe(double) { ++round_; }

 private:
  std::vector<double> lambdas_;
  std::size_t round_ = 0;
};

// Type-erased strategy for runtime selection (CLI, confidence sequences).
class Strategy {
 public:
  template <class S>
    requires BettingStrategy<S> && (!std::same_as<std::remove_cvref_t<S>, Strategy>)
  Strategy(S s) : impl_(std::move(s)) {}

  double bet() const {
    return std::visit([](const auto& s) { return s.bet(); }, impl_);
  }
  void observe(double x) {
    std::visit([x](auto& s) { s.observe(x); }, impl_);
  }

 private:
  std::variant<ConstantBet, UniversalPortfolio, ScheduledBet> impl_;
};

// Parsed form of `constant:<lambda>` / `up[:K]`; builds a fresh strategy per mean.
struct StrategySpec {
  enum class Kind { kConstant, kUniversalPortfolio };
  Kind kind = Kind::kUniversalPortfolio;
  double lambda = 0.0;
  std::size_t nodes = kDefaultPortfolioNodes;
  bool raw = false;

  Strategy make(double mu) const {
    if (kind == Kind::kConstant) return ConstantBet(mu, lambda);
    return UniversalPortfolio(mu, nodes, raw);
  }
};

}  // namespace evbet

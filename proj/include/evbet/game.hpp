#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evbet/betting.hpp"
#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/evariables.hpp"

namespace evbet {

struct LedgerRow {
  std::size_t t = 0;
  double x = 0.0;
  // Bet placed this round; for Hoeffding ledgers this column holds alpha.
  double lambda = 0.0;
  double e_value = 1.0;
  double log_wealth = 0.0;
};

// Record of one testing-by-betting game. log_wealth is the running sum of
// log e-values and saturates at -inf once any e-value is zero.
class WealthLedger {
 public:
  WealthLedger(double mu, double delta) : mu_(mu), delta_(delta) {
    if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
    threshold_ = std::log(1.0 / delta_);
  }

  double mu() const { return mu_; }
  double delta() const { return delta_; }
  double threshold() const { return threshold_; }
  const std::vector<LedgerRow>& rows() const { return rows_; }
  std::size_t rounds() const { return rows_.size(); }
  std::optional<std::size_t> rejected_at() const { return rejected_at_; }
  bool rejected() const { return rejected_at_.has_value(); }

  double log_wealth() const { return rows_.empty() ? 0.0 : rows_.back().log_wealth; }
  bool bankrupt() const { return log_wealth() == -std::numeric_limits<double>::infinity(); }

  void reserve(std::size_t n) { rows_.reserve(n); }

  // Appends a round with an already-computed e-value.
  void record(double x, double bet, double e_value) {
    if (!(e_value >= 0.0)) throw InvalidArgument("e-values must be non-negative");
    const double prev = log_wealth();
    const double r = prev == -std::numeric_limits<double>::infinity()
                         ? prev
                         : (e_value == 0.0 ? -std::numeric_limits<double>::infinity() : prev + std::log(e_value));
    rows_.push_back({rows_.size() + 1, x, bet, e_value, r});
    if (!rejected_at_ && r > threshold_) rejected_at_ = rows_.size();
  }

 private:
  double mu_;
  double delta_;
  double threshold_;
  std::vector<LedgerRow> rows_;
  std::optional<std::size_t> rejected_at_;
};

// Payoff 1 + lambda (x - mu), with rounding residue at the boundary of I_mu
// snapped to an exact zero.
inline double coinbet_payoff(double lambda, double x, double mu) {
  const double e = 1.0 + lambda * (x - mu);
  return e <= 4.0 * std::numeric_limits<double>::epsilon() ? 0.0 : e;
}

// One round: the bet is fixed before x is revealed, then the strategy sees x.
template <BettingStrategy S>
void play_round(WealthLedger& ledger, S& strategy, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("observations must lie in [0,1]");
  const double lambda = strategy.bet();
  ledger.record(x, lambda, coinbet_payoff(lambda, x, ledger.mu()));
  strategy.observe(x);
}

template <BettingStrategy S>
WealthLedger run_game(double mu, double delta, S strategy, std::span<const double> xs) {
  WealthLedger ledger(mu, delta);
  ledger.reserve(xs.size());
  for (double x : xs) play_round(ledger, strategy, x);
  return ledger;
}

// Game restricted to the Hoeffding class with a predetermined alpha schedule
// (the last alpha repeats).
inline WealthLedger run_hoeffding_game(double mu, double delta, std::span<const double> alphas,
                                       std::span<const double> xs) {
  if (alphas.empty()) throw InvalidArgument("alpha schedule must not be empty");
  WealthLedger ledger(mu, delta);
  ledger.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const double alpha = alphas[std::min(t, alphas.size() - 1)];
    if (!(xs[t] >= 0.0 && xs[t] <= 1.0)) throw InvalidArgument("observations must lie in [0,1]");
    ledger.record(xs[t], alpha, HoeffdingEVariable(mu, alpha)(xs[t]));
  }
  return ledger;
}

// Coin-bet shadow of a Hoeffding schedule: each alpha replaced by the bet
// whose payoff majorises it.
inline ScheduledBet dominating_schedule(double mu, std::span<const double> alphas) {
  std::vector<double> lambdas;
  lambdas.reserve(alphas.size());
  for (double a : alphas) lambdas.push_back(dominating_lambda(mu, a));
  return ScheduledBet(mu, std::move(lambdas));
}

}  // namespace evbet

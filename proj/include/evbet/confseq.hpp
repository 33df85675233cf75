#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "evbet/betting.hpp"
#include "evbet/error.hpp"
#include "evbet/game.hpp"
#include "evbet/parallel.hpp"

namespace evbet {

inline constexpr std::size_t kDefaultMuGridSize = 99;

// m equispaced candidate means i/(m+1), i = 1..m; the endpoints 0 and 1 are excluded.
inline std::vector<double> mu_grid(std::size_t m = kDefaultMuGridSize) {
  if (m < 1) throw InvalidArgument("mu grid needs at least one point");
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) g[i] = static_cast<double>(i + 1) / static_cast<double>(m + 1);
  return g;
}

struct ConfidenceInterval {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  std::size_t alive = 0;

  double width() const { return alive == 0 ? 0.0 : upper - lower; }
  bool contains(double mu) const { return alive > 0 && lower <= mu && mu <= upper; }
};

// One independent game per candidate mean, all fed the same stream. The set
// at round n keeps the means whose log-wealth is still at most log(1/delta);
// with running intersection a mean leaves the set for good once rejected.
class ConfidenceState {
 public:
  using StrategyFactory = std::function<Strategy(double mu)>;

  ConfidenceState(std::vector<double> grid, double delta, const StrategyFactory& factory,
                  bool running_intersect = false)
      : grid_(std::move(grid)), running_intersect_(running_intersect) {
    if (grid_.empty()) throw InvalidArgument("mu grid must not be empty");
    ledgers_.reserve(grid_.size());
    strategies_.reserve(grid_.size());
    for (double mu : grid_) {
      ledgers_.emplace_back(mu, delta);
      strategies_.push_back(factory(mu));
    }
  }

  ConfidenceState(std::vector<double> grid, double delta, const StrategySpec& spec, bool running_intersect = false)
      : ConfidenceState(std::move(grid), delta, [&spec](double mu) { return spec.make(mu); }, running_intersect) {}

  // Wraps ledgers produced elsewhere (e.g. by a non-coin-bet game). They must
  // share delta and the number of rounds played.
  static ConfidenceState from_ledgers(std::vector<WealthLedger> ledgers, bool running_intersect = false) {
    if (ledgers.empty()) throw InvalidArgument("need at least one ledger");
    ConfidenceState s;
    s.running_intersect_ = running_intersect;
    for (const auto& l : ledgers) {
      if (l.rounds() != ledgers.front().rounds() || l.delta() != ledgers.front().delta())
        throw InvalidArgument("ledgers must share delta and length");
      s.grid_.push_back(l.mu());
    }
    s.ledgers_ = std::move(ledgers);
    return s;
  }

  void update(double x) {
    if (strategies_.size() != ledgers_.size()) throw InvalidArgument("state has no strategies to advance");
    for (std::size_t i = 0; i < ledgers_.size(); ++i) play_round(ledgers_[i], strategies_[i], x);
  }

  // Feeds a whole stream. Grid points are independent, so they are split
  // across workers; results do not depend on the worker count.
  void run(std::span<const double> xs, unsigned threads = 1) {
    if (strategies_.size() != ledgers_.size()) throw InvalidArgument("state has no strategies to advance");
    for (auto& l : ledgers_) l.reserve(l.rounds() + xs.size());
    parallel_for(ledgers_.size(), threads, [&](std::size_t i) {
      for (double x : xs) play_round(ledgers_[i], strategies_[i], x);
    });
  }

  std::size_t rounds() const { return ledgers_.front().rounds(); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<WealthLedger>& ledgers() const { return ledgers_; }
  bool running_intersect() const { return running_intersect_; }
  double threshold() const { return ledgers_.front().threshold(); }

  double log_wealth(std::size_t n, std::size_t i) const {
    return n == 0 ? 0.0 : ledgers_[i].rows()[n - 1].log_wealth;
  }

  // Membership of grid point i in the raw set S_n.
  bool in_raw_set(std::size_t n, std::size_t i) const { return log_wealth(n, i) <= threshold(); }

  bool in_set(std::size_t n, std::size_t i) const {
    if (n > rounds()) throw InvalidArgument("round beyond those played");
    if (!running_intersect_) return in_raw_set(n, i);
    const auto r = ledgers_[i].rejected_at();
    return !(r && *r <= n);
  }

  ConfidenceInterval interval(std::size_t n) const {
    if (n > rounds()) throw InvalidArgument("round beyond those played");
    ConfidenceInterval ci;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (!in_set(n, i)) continue;
      ci.lower = ci.alive == 0 ? grid_[i] : std::min(ci.lower, grid_[i]);
      ci.upper = ci.alive == 0 ? grid_[i] : std::max(ci.upper, grid_[i]);
      ++ci.alive;
    }
    return ci;
  }

 private:
  ConfidenceState() = default;

  std::vector<double> grid_;
  bool running_intersect_ = false;
  std::vector<WealthLedger> ledgers_;
  std::vector<Strategy> strategies_;
};

inline void cs_update(ConfidenceState& state, double x) { state.update(x); }

inline ConfidenceInterval cs_interval(const ConfidenceState& state, std::size_t n) { return state.interval(n); }

}  // namespace evbet

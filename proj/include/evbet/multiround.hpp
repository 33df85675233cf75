#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/evariables.hpp"
#include "evbet/game.hpp"
#include "evbet/parallel.hpp"

namespace evbet {

using Path = std::vector<double>;

namespace detail {

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

// Level-order index of the node at `depth`, position `pos` within that level.
inline std::size_t node_index(std::size_t depth, std::size_t pos) { return (std::size_t{1} << depth) - 1 + pos; }

}  // namespace detail

// Coin-betting player over a fixed horizon on a finite grid. lambdas[t] holds
// the bet for round t+1 as a function of the first t observations, stored as
// a table indexed by the base-|X| digits of the grid indices (first
// observation most significant).
class MultiRoundCoinBet {
 public:
  MultiRoundCoinBet(SampleSpace space, std::vector<std::vector<double>> lambdas)
      : space_(std::move(space)), lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw InvalidArgument("horizon must be at least 1");
    const BetRange range(space_.mu());
    for (std::size_t t = 0; t < lambdas_.size(); ++t) {
      if (lambdas_[t].size() != detail::ipow(space_.size(), t))
        throw InvalidArgument("bet table for round " + std::to_string(t + 1) + " has the wrong size");
      for (double l : lambdas_[t])
        if (!range.contains(l)) throw OutOfRange("multi-round bet " + std::to_string(l) + " outside I_mu");
    }
  }

  // Bets drawn uniformly from I_mu at every node.
  static MultiRoundCoinBet random(const SampleSpace& space, std::size_t horizon, std::mt19937_64& gen) {
    const BetRange range(space.mu());
    std::vector<std::vector<double>> lambdas(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
      lambdas[t].resize(detail::ipow(space.size(), t));
      for (double& l : lambdas[t]) l = range.lo + range.width() * unit_uniform(gen);
    }
    return MultiRoundCoinBet(space, std::move(lambdas));
  }

  const SampleSpace& space() const { return space_; }
  std::size_t horizon() const { return lambdas_.size(); }
  double mu() const { return space_.mu(); }
  const std::vector<std::vector<double>>& lambdas() const { return lambdas_; }

  double lambda_at(std::span<const double> prefix) const {
    if (prefix.size() >= horizon()) throw InvalidArgument("prefix longer than horizon - 1");
    return lambdas_[prefix.size()][prefix_index(prefix)];
  }

  // Wealth after observing xs (any length up to the horizon).
  double operator()(std::span<const double> xs) const {
    if (xs.size() > horizon()) throw InvalidArgument("path longer than horizon");
    double wealth = 1.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
      wealth *= coinbet_payoff(lambdas_[t][idx], xs[t], mu());
      idx = idx * space_.size() + grid_index(xs[t]);
    }
    return wealth;
  }

 private:
  std::size_t grid_index(double x) const {
    auto i = space_.index_of(x);
    if (!i) throw InvalidArgument("observation " + std::to_string(x) + " is not a grid point");
    return *i;
  }

  std::size_t prefix_index(std::span<const double> prefix) const {
    std::size_t idx = 0;
    for (double x : prefix) idx = idx * space_.size() + grid_index(x);
    return idx;
  }

  SampleSpace space_;
  std::vector<std::vector<double>> lambdas_;
};

inline double eval_multiround(const MultiRoundCoinBet& e, std::span<const double> xs) { return e(xs); }

// A process E_t(x^t), t = 0..max_depth, given by an evaluation rule.
class EProcess {
 public:
  using Rule = std::function<double(std::span<const double>)>;

  EProcess(double mu, std::size_t max_depth, Rule rule) : mu_(mu), max_depth_(max_depth), rule_(std::move(rule)) {
    if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
  }

  // Wealth process of a coin-betting player.
  static EProcess coin_bet(const MultiRoundCoinBet& bets) {
    return EProcess(bets.mu(), bets.horizon(), [bets](std::span<const double> p) { return bets(p); });
  }

  static EProcess constant(double mu, std::size_t max_depth, double value) {
    return EProcess(mu, max_depth, [value](std::span<const double>) { return value; });
  }

  // Entry per (depth, path); a lookup outside the table throws.
  static EProcess from_table(double mu, std::map<Path, double> table) {
    std::size_t depth = 0;
    for (const auto& [path, v] : table) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("e-process values must be finite and >= 0");
      depth = std::max(depth, path.size());
    }
    return EProcess(mu, depth, [table = std::move(table)](std::span<const double> p) {
      auto it = table.find(Path(p.begin(), p.end()));
      if (it == table.end()) {
        std::string s;
        for (double x : p) s += (s.empty() ? "" : ",") + std::to_string(x);
        throw InvalidArgument("e-process table has no entry for path (" + s + ")");
      }
      return it->second;
    });
  }

  // Same process with E_depth multiplied by factor.
  EProcess scaled_at(std::size_t depth, double factor) const {
    return EProcess(mu_, max_depth_, [rule = rule_, depth, factor](std::span<const double> p) {
      return p.size() == depth ? factor * rule(p) : rule(p);
    });
  }

  double mu() const { return mu_; }
  std::size_t max_depth() const { return max_depth_; }

  double operator()(std::span<const double> path) const {
    if (path.size() > max_depth_) throw InvalidArgument("path deeper than the process");
    const double v = rule_(path);
    if (!(v >= 0.0)) throw InvalidArgument("e-process evaluated to a negative or NaN value");
    return v;
  }

 private:
  double mu_;
  std::size_t max_depth_;
  Rule rule_;
};

// Coefficients d of a depth-T tree of two-point branchings: one (a, b) pair
// per internal node in level order, the left child taking value a with
// probability W(a, b) and the right child b with the rest.
class TreeHypothesis {
 public:
  TreeHypothesis(double mu, std::vector<std::pair<double, double>> nodes) : mu_(mu), nodes_(std::move(nodes)) {
    if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
    const std::size_t n = nodes_.size();
    if (n == 0 || ((n + 1) & n) != 0) throw InvalidArgument("a depth-T tree has 2^T - 1 nodes");
    for (auto [a, b] : nodes_) {
      if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) throw InvalidArgument("tree coefficients lie in [0,1]");
      two_point_weight(a, b, mu_);  // throws MeanOutsideSpan
    }
    while ((std::size_t{1} << depth_) - 1 < n) ++depth_;
  }

  double mu() const { return mu_; }
  std::size_t depth() const { return depth_; }
  const std::vector<std::pair<double, double>>& nodes() const { return nodes_; }
  std::pair<double, double> node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return two_point_weight(nodes_[i].first, nodes_[i].second, mu_); }

  // Mass of every depth-T leaf, in level order.
  std::vector<double> leaf_masses() const {
    std::vector<double> mass{1.0};
    for (std::size_t k = 0; k < depth_; ++k) {
      std::vector<double> next(mass.size() * 2);
      for (std::size_t j = 0; j < mass.size(); ++j) {
        const double w = weight(detail::node_index(k, j));
        next[2 * j] = mass[j] * w;
        next[2 * j + 1] = mass[j] * (1.0 - w);
      }
      mass = std::move(next);
    }
    return mass;
  }

 private:
  double mu_;
  std::vector<std::pair<double, double>> nodes_;
  std::size_t depth_ = 0;
};

// Pruned tree over the full binary tree of a given depth: each node either
// stops, branches into both children, or is unreached. This is how a
// stopping time bounded by the depth acts on a tree hypothesis.
class StoppingMask {
 public:
  enum class State : std::uint8_t { kUnreached = 0, kStop = 1, kBranch = 2 };

  StoppingMask(std::size_t depth, std::vector<State> states) : depth_(depth), states_(std::move(states)) {
    if (states_.size() != (std::size_t{2} << depth_) - 1) throw InvalidArgument("mask size does not match its depth");
    validate(0, 0, true);
  }

  // Every path stops at exactly `k`.
  static StoppingMask stop_at(std::size_t depth, std::size_t k) {
    if (k > depth) throw InvalidArgument("stopping depth beyond mask depth");
    std::vector<State> s((std::size_t{2} << depth) - 1, State::kUnreached);
    for (std::size_t level = 0; level <= k; ++level)
      for (std::size_t j = 0; j < (std::size_t{1} << level); ++j)
        s[detail::node_index(level, j)] = level == k ? State::kStop : State::kBranch;
    return StoppingMask(depth, std::move(s));
  }

  static StoppingMask full(std::size_t depth) { return stop_at(depth, depth); }

  // One character per node in level order: 'b' branch, 's' stop, '.' unreached.
  static StoppingMask parse(std::string_view text) {
    const std::size_t n = text.size();
    if (n == 0 || ((n + 1) & n) != 0) throw ParseError("mask string length must be 2^(T+1) - 1");
    std::size_t depth = 0;
    while ((std::size_t{2} << depth) - 1 < n) ++depth;
    std::vector<State> s;
    s.reserve(n);
    for (char c : text) {
      switch (c) {
        case 'b': s.push_back(State::kBranch); break;
        case 's': s.push_back(State::kStop); break;
        case '.': s.push_back(State::kUnreached); break;
        default: throw ParseError(std::string("bad mask character '") + c + "'");
      }
    }
    return StoppingMask(depth, std::move(s));
  }

  std::string to_string() const {
    std::string out;
    out.reserve(states_.size());
    for (State s : states_) out += s == State::kBranch ? 'b' : s == State::kStop ? 's' : '.';
    return out;
  }

  std::size_t depth() const { return depth_; }
  State at(std::size_t node) const { return states_[node]; }
  const std::vector<State>& states() const { return states_; }

  // Deepest level at which the mask stops.
  std::size_t reach() const {
    std::size_t r = 0;
    for (std::size_t k = 0; k <= depth_; ++k)
      for (std::size_t j = 0; j < (std::size_t{1} << k); ++j)
        if (states_[detail::node_index(k, j)] == State::kStop) r = k;
    return r;
  }

  friend bool operator==(const StoppingMask&, const StoppingMask&) = default;

 private:
  void validate(std::size_t level, std::size_t pos, bool reached) const {
    const State s = states_[detail::node_index(level, pos)];
    if (!reached) {
      if (s != State::kUnreached) throw InvalidArgument("mask marks a node below a stop");
    } else if (s == State::kUnreached) {
      throw InvalidArgument("mask leaves a reachable node unassigned");
    } else if (level == depth_ && s == State::kBranch) {
      throw InvalidArgument("mask branches past its depth");
    }
    if (level == depth_) return;
    const bool below = reached && s == State::kBranch;
    validate(level + 1, 2 * pos, below);
    validate(level + 1, 2 * pos + 1, below);
  }

  std::size_t depth_;
  std::vector<State> states_;
};

inline constexpr std::size_t kMaxMaskDepth = 5;
inline constexpr std::size_t kMaxAuditDepth = 4;

// All pruned trees of depth at most T; there are f(T) = 1 + f(T-1)^2 of them.
inline std::vector<StoppingMask> enumerate_masks(std::size_t depth) {
  if (depth > kMaxMaskDepth) throw DepthTooLarge("mask enumeration is limited to depth " + std::to_string(kMaxMaskDepth));
  using State = StoppingMask::State;
  // Level-order state arrays for subtrees of depth d, built bottom-up.
  std::vector<std::vector<State>> shapes{{State::kStop}};
  for (std::size_t d = 1; d <= depth; ++d) {
    const std::size_t size = (std::size_t{2} << d) - 1;
    std::vector<std::vector<State>> next;
    next.reserve(1 + shapes.size() * shapes.size());
    std::vector<State> stop(size, State::kUnreached);
    stop[0] = State::kStop;
    next.push_back(std::move(stop));
    for (const auto& left : shapes) {
      for (const auto& right : shapes) {
        std::vector<State> s(size, State::kUnreached);
        s[0] = State::kBranch;
        for (std::size_t k = 0; k < d; ++k) {
          const std::size_t width = std::size_t{1} << k;
          for (std::size_t j = 0; j < width; ++j) {
            s[detail::node_index(k + 1, j)] = left[detail::node_index(k, j)];
            s[detail::node_index(k + 1, width + j)] = right[detail::node_index(k, j)];
          }
        }
        next.push_back(std::move(s));
      }
    }
    shapes = std::move(next);
  }
  std::vector<StoppingMask> masks;
  masks.reserve(shapes.size());
  for (auto& s : shapes) masks.emplace_back(depth, std::move(s));
  return masks;
}

// h(d, M, f): expectation of the stopped process under the tree measure.
// Branches of zero probability are not evaluated.
template <class F>
double tree_expectation(const TreeHypothesis& d, const StoppingMask& mask, const F& f) {
  if (mask.reach() > d.depth()) throw InvalidArgument("mask reaches deeper than the tree");
  Path path;
  path.reserve(d.depth());
  std::function<double(std::size_t, std::size_t)> walk = [&](std::size_t level, std::size_t pos) -> double {
    const std::size_t node = detail::node_index(level, pos);
    if (mask.at(node) == StoppingMask::State::kStop) return f(std::span<const double>(path));
    const auto [a, b] = d.node(node);
    const double w = d.weight(node);
    double v = 0.0;
    if (w > 0.0) {
      path.push_back(a);
      v += w * walk(level + 1, 2 * pos);
      path.pop_back();
    }
    if (w < 1.0) {
      path.push_back(b);
      v += (1.0 - w) * walk(level + 1, 2 * pos + 1);
      path.pop_back();
    }
    return v;
  };
  return walk(0, 0);
}

struct AuditReport {
  double max_expectation = -std::numeric_limits<double>::infinity();
  std::optional<TreeHypothesis> d;
  std::optional<StoppingMask> mask;
  bool pass = true;
  // Tree hypotheses examined (each against its best mask).
  std::size_t trees_examined = 0;
};

inline constexpr double kAuditTol = 1e-9;

namespace detail {

// Zero-probability subtrees still need a well-formed mask entry.
inline void fill_stop(std::vector<StoppingMask::State>& states, std::size_t level, std::size_t pos) {
  states[node_index(level, pos)] = StoppingMask::State::kStop;
}

struct StopChoice {
  bool stop = true;
  std::pair<double, double> pair{0.0, 1.0};
};

// Optimal stopping over a fixed tree: best value reachable below `node`,
// recording the stop/branch decision per node.
template <class F>
double best_mask_value(const TreeHypothesis& d, const F& f, std::size_t level, std::size_t pos, Path& path,
                       std::vector<StoppingMask::State>& states) {
  const std::size_t node = node_index(level, pos);
  const double stop_value = f(std::span<const double>(path));
  if (level == d.depth()) {
    states[node] = StoppingMask::State::kStop;
    return stop_value;
  }
  const auto [a, b] = d.node(node);
  const double w = d.weight(node);
  std::vector<StoppingMask::State> branch_states = states;
  double cont = 0.0;
  if (w > 0.0) {
    path.push_back(a);
    cont += w * best_mask_value(d, f, level + 1, 2 * pos, path, branch_states);
    path.pop_back();
  } else {
    fill_stop(branch_states, level + 1, 2 * pos);
  }
  if (w < 1.0) {
    path.push_back(b);
    cont += (1.0 - w) * best_mask_value(d, f, level + 1, 2 * pos + 1, path, branch_states);
    path.pop_back();
  } else {
    fill_stop(branch_states, level + 1, 2 * pos + 1);
  }
  if (cont > stop_value) {
    states = std::move(branch_states);
    states[node] = StoppingMask::State::kBranch;
    return cont;
  }
  states[node] = StoppingMask::State::kStop;
  return stop_value;
}

// Exact optimum over trees whose coefficients come from a coarse set: each
// node picks its pair independently, so the sup decomposes path by path.
template <class F>
class CoarseSearch {
 public:
  CoarseSearch(const F& f, double mu, std::size_t depth, std::span<const double> coarse) : f_(f), mu_(mu), depth_(depth) {
    for (double c : coarse) {
      if (c <= mu) lows_.push_back(c);
      if (c >= mu) highs_.push_back(c);
    }
    if (lows_.empty() || highs_.empty()) throw InvalidArgument("coarse grid must have points on both sides of mu");
  }

  double value(Path& path) {
    auto it = memo_.find(path);
    if (it != memo_.end()) return it->second.first;
    const double stop_value = f_(std::span<const double>(path));
    StopChoice choice;
    double best = stop_value;
    if (path.size() < depth_) {
      for (double a : lows_) {
        for (double b : highs_) {
          const double w = two_point_weight(a, b, mu_);
          double cont = 0.0;
          if (w > 0.0) {
            path.push_back(a);
            cont += w * value(path);
            path.pop_back();
          }
          if (w < 1.0) {
            path.push_back(b);
            cont += (1.0 - w) * value(path);
            path.pop_back();
          }
          if (cont > best) {
            best = cont;
            choice = {false, {a, b}};
          }
        }
      }
    }
    memo_.emplace(path, std::make_pair(best, choice));
    return best;
  }

  // Turns the recorded decisions into an explicit (d, M) pair.
  std::pair<TreeHypothesis, StoppingMask> witness() {
    std::vector<std::pair<double, double>> nodes((std::size_t{1} << depth_) - 1, {lows_.front(), highs_.back()});
    std::vector<StoppingMask::State> states((std::size_t{2} << depth_) - 1, StoppingMask::State::kUnreached);
    Path path;
    assign(0, 0, path, nodes, states);
    return {TreeHypothesis(mu_, std::move(nodes)), StoppingMask(depth_, std::move(states))};
  }

 private:
  void assign(std::size_t level, std::size_t pos, Path& path, std::vector<std::pair<double, double>>& nodes,
              std::vector<StoppingMask::State>& states) {
    const std::size_t node = node_index(level, pos);
    value(path);
    const StopChoice c = memo_.at(path).second;
    if (c.stop) {
      states[node] = StoppingMask::State::kStop;
      return;
    }
    states[node] = StoppingMask::State::kBranch;
    nodes[node] = c.pair;
    path.push_back(c.pair.first);
    assign(level + 1, 2 * pos, path, nodes, states);
    path.back() = c.pair.second;
    assign(level + 1, 2 * pos + 1, path, nodes, states);
    path.pop_back();
  }

  const F& f_;
  double mu_;
  std::size_t depth_;
  std::vector<double> lows_;
  std::vector<double> highs_;
  std::map<Path, std::pair<double, StopChoice>> memo_;
};

inline TreeHypothesis random_tree(const SampleSpace& space, std::size_t depth, std::mt19937_64& gen) {
  std::vector<double> lows;
  std::vector<double> highs;
  for (double x : space.points()) {
    if (x <= space.mu() || space.is_mu(x)) lows.push_back(space.is_mu(x) ? space.mu() : x);
    if (x >= space.mu() || space.is_mu(x)) highs.push_back(space.is_mu(x) ? space.mu() : x);
  }
  std::vector<std::pair<double, double>> nodes((std::size_t{1} << depth) - 1);
  for (auto& n : nodes) {
    const auto i = static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(lows.size()));
    const auto j = static_cast<std::size_t>(unit_uniform(gen) * static_cast<double>(highs.size()));
    n = {lows[i], highs[j]};
  }
  return TreeHypothesis(space.mu(), std::move(nodes));
}

}  // namespace detail

// Best stopping mask for a fixed tree, with its value.
template <class F>
std::pair<StoppingMask, double> best_mask(const TreeHypothesis& d, const F& f) {
  std::vector<StoppingMask::State> states((std::size_t{2} << d.depth()) - 1, StoppingMask::State::kUnreached);
  Path path;
  const double v = detail::best_mask_value(d, f, 0, 0, path, states);
  return {StoppingMask(d.depth(), std::move(states)), v};
}

// Searches two-point tree nulls and bounded stopping times for an expectation
// above 1. Coarse-grid trees are optimised exactly; n_random further trees
// with coefficients drawn uniformly from the grid are each paired with their
// best mask. A reported violation is always real; a pass is only evidence.
inline AuditReport audit_eprocess(const EProcess& e, const SampleSpace& space, std::size_t depth,
                                  std::span<const double> coarse, std::size_t n_random, std::uint64_t seed,
                                  unsigned threads = 1) {
  if (depth > kMaxAuditDepth) throw DepthTooLarge("audit is limited to depth " + std::to_string(kMaxAuditDepth));
  if (depth > e.max_depth()) throw InvalidArgument("audit depth exceeds the process depth");
  if (space.mu() != e.mu()) throw InvalidArgument("sample space and process disagree on mu");
  for (double c : coarse)
    if (!space.index_of(c)) throw InvalidArgument("coarse point " + std::to_string(c) + " is not on the grid");

  AuditReport report;
  auto consider = [&](TreeHypothesis d, StoppingMask m) {
    const double v = tree_expectation(d, m, e);
    ++report.trees_examined;
    if (v > report.max_expectation) {
      report.max_expectation = v;
      report.d = std::move(d);
      report.mask = std::move(m);
    }
  };

  if (!coarse.empty()) {
    detail::CoarseSearch search(e, space.mu(), depth, coarse);
    Path root;
    search.value(root);
    auto [d, m] = search.witness();
    consider(std::move(d), std::move(m));
  }

  std::vector<std::optional<std::pair<TreeHypothesis, StoppingMask>>> found(n_random);
  std::vector<double> values(n_random, -std::numeric_limits<double>::infinity());
  parallel_for(n_random, threads, [&](std::size_t i) {
    std::mt19937_64 gen(replicate_seed(seed, i));
    TreeHypothesis d = detail::random_tree(space, depth, gen);
    auto [m, v] = best_mask(d, e);
    values[i] = v;
    found[i].emplace(std::move(d), std::move(m));
  });
  // Max with lowest-index tie-break keeps the report independent of threads.
  std::size_t best = n_random;
  for (std::size_t i = 0; i < n_random; ++i)
    if (best == n_random || values[i] > values[best]) best = i;
  report.trees_examined += n_random;
  if (best < n_random && values[best] > report.max_expectation) {
    auto& [d, m] = *found[best];
    report.max_expectation = tree_expectation(d, m, e);
    report.d = d;
    report.mask = m;
  }
  report.pass = report.max_expectation <= 1.0 + kAuditTol;
  return report;
}

// Tabulated function on grid x grid, row-major: value(i, j) = E(x_i, y_j).
class PairTable {
 public:
  PairTable(SampleSpace space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
    if (values_.size() != space_.size() * space_.size()) throw InvalidArgument("pair table needs |X|^2 entries");
    for (double v : values_)
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("pair table values must be finite and >= 0");
  }

  template <class F>
  static PairTable tabulate(const SampleSpace& space, const F& f) {
    std::vector<double> v;
    v.reserve(space.size() * space.size());
    for (double x : space.points())
      for (double y : space.points()) v.push_back(f(x, y));
    return PairTable(space, std::move(v));
  }

  const SampleSpace& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t side() const { return space_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * side() + j]; }

  std::vector<double> row(std::size_t i) const {
    return {values_.begin() + static_cast<std::ptrdiff_t>(i * side()),
            values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * side())};
  }

  // Lookup by grid values; used as the depth-2 layer of an e-process.
  double at(double x, double y) const {
    auto i = space_.index_of(x);
    auto j = space_.index_of(y);
    if (!i || !j) throw InvalidArgument("pair table lookup off the grid");
    return (*this)(*i, *j);
  }

 private:
  SampleSpace space_;
  std::vector<double> values_;
};

struct T2Dominator {
  MultiRoundCoinBet bets;
  // Largest amount by which the table exceeds the product payoff (<= 0 when
  // the majorisation holds exactly).
  double max_shortfall = 0.0;
};

struct T2Refutation {
  TreeHypothesis witness;
  double expectation = 0.0;
};

using T2Outcome = std::variant<T2Dominator, T2Refutation>;

// Two-round domination: first a bet lambda_1 covering the best conditional
// second-round expectation m(x), then per first observation a bet covering
// the rescaled second-round slice.
inline T2Outcome dominate_t2(const PairTable& e) {
  const SampleSpace& space = e.space();
  const double mu = space.mu();
  const std::size_t n = space.size();

  std::vector<double> m(n);
  std::vector<TwoPointMeasure> inner(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto [q, v] = detail::best_two_point(space, e.row(i));
    inner[i] = q;
    m[i] = v;
  }

  auto [outer, worst] = detail::best_two_point(space, m);
  if (worst > 1.0 + kValidityTol) {
    auto pair_of = [&](double x) {
      const TwoPointMeasure& q = inner[*space.index_of(x)];
      return std::make_pair(q.a, q.b);
    };
    TreeHypothesis d(mu, {{outer.a, outer.b}, pair_of(outer.a), pair_of(outer.b)});
    const double value = tree_expectation(d, StoppingMask::full(2), [&](std::span<const double> p) {
      return p.size() == 2 ? e.at(p[0], p[1]) : 0.0;
    });
    return T2Refutation{std::move(d), value};
  }

  const double lambda1 = beta_bounds(space, m).lambda_hat;
  std::vector<double> lambda2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = coinbet_payoff(lambda1, space[i], mu);
    if (scale <= 0.0) continue;
    std::vector<double> slice = e.row(i);
    for (double& v : slice) v /= scale;
    lambda2[i] = beta_bounds(space, slice).lambda_hat;
  }

  MultiRoundCoinBet bets(space, {{lambda1}, lambda2});
  double shortfall = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double xs[2] = {space[i], space[j]};
      shortfall = std::max(shortfall, e(i, j) - bets(xs));
    }
  return T2Dominator{std::move(bets), shortfall};
}

}  // namespace evbet

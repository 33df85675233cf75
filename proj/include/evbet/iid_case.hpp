#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "evbet/domain.hpp"
#include "evbet/error.hpp"
#include "evbet/multiround.hpp"

namespace evbet {

// Two-round payoffs on X = {0, 1/2, 1} with mu = 1/2 under an i.i.d. null.
// The expectation under Q x Q with Q({1/2}) = q only depends on three averages:
//   xi0 = E(1/2,1/2)
//   xi1 = mean of E over the cells with exactly one coordinate equal to 1/2
//   xi2 = mean of E over the cells with no coordinate equal to 1/2
struct XiStats {
  double xi0 = 1.0;
  double xi1 = 1.0;
  double xi2 = 1.0;
};

inline SampleSpace iid_space() { return SampleSpace({0.0, 0.5, 1.0}, 0.5); }

inline XiStats xi_stats(const PairTable& e) {
  const SampleSpace& s = e.space();
  if (s.points() != std::vector<double>{0.0, 0.5, 1.0} || s.mu() != 0.5)
    throw InvalidArgument("i.i.d. characterisation needs X = {0, 1/2, 1} and mu = 1/2");
  // Grid indices: 0 -> 0, 1 -> 1/2, 2 -> 1.
  return {e(1, 1), (e(2, 1) + e(1, 2) + e(1, 0) + e(0, 1)) / 4.0, (e(2, 2) + e(2, 0) + e(0, 2) + e(0, 0)) / 4.0};
}

// q^2 xi0 + 2 q (1-q) xi1 + (1-q)^2 xi2.
inline double iid_expectation(const XiStats& s, double q) {
  return q * q * s.xi0 + 2.0 * q * (1.0 - q) * s.xi1 + (1.0 - q) * (1.0 - q) * s.xi2;
}

inline constexpr double kIidSlack = 1e-12;

inline bool check_iid_closed_form(const XiStats& s) {
  if (s.xi0 > 1.0 + kIidSlack || s.xi2 > 1.0 + kIidSlack) return false;
  const double room = std::max(0.0, (1.0 - s.xi0) * (1.0 - s.xi2));
  return s.xi1 <= 1.0 + std::sqrt(room) + kIidSlack;
}

// Interior stationary point of the expectation in q, when the parabola is
// concave and the point lies in (0,1).
inline std::optional<double> iid_interior_maximizer(const XiStats& s) {
  const double curvature = s.xi0 + s.xi2 - 2.0 * s.xi1;
  if (!(curvature < 0.0)) return std::nullopt;
  const double q = (s.xi1 - s.xi2) / (2.0 * s.xi1 - s.xi0 - s.xi2);
  if (!(q > 0.0 && q < 1.0)) return std::nullopt;
  return q;
}

// Value at the interior maximiser: (xi1^2 - xi0 xi2) / (2 xi1 - xi0 - xi2).
inline double iid_interior_max(const XiStats& s) {
  return (s.xi1 * s.xi1 - s.xi0 * s.xi2) / (2.0 * s.xi1 - s.xi0 - s.xi2);
}

struct IidBruteForce {
  double max_expectation = 0.0;
  double argmax_q = 0.0;
  bool valid() const { return max_expectation <= 1.0 + kDerivedTol; }
};

inline constexpr std::size_t kDefaultQSteps = 10000;

// Grid search over q in [0,1], refined with the analytic interior maximiser.
inline IidBruteForce check_iid_bruteforce(const XiStats& s, std::size_t q_steps = kDefaultQSteps) {
  if (q_steps < 2) throw InvalidArgument("q grid needs at least two points");
  IidBruteForce r{iid_expectation(s, 0.0), 0.0};
  for (std::size_t i = 1; i < q_steps; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(q_steps - 1);
    const double v = iid_expectation(s, q);
    if (v > r.max_expectation) r = {v, q};
  }
  if (auto q = iid_interior_maximizer(s)) {
    const double v = iid_expectation(s, *q);
    if (v > r.max_expectation) r = {v, *q};
  }
  return r;
}

}  // namespace evbet

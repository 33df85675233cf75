#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evbet/error.hpp"

namespace evbet {

// Tolerance for measure-level invariants (masses summing to one, means).
inline constexpr double kMeasureTol = 1e-12;
// Tolerance for quantities derived through longer arithmetic chains.
inline constexpr double kDerivedTol = 1e-9;

// Grid points closer than this to each other (or to mu) are treated as equal.
inline constexpr double kPointTol = 1e-12;

inline bool valid_mean(double mu) { return std::isfinite(mu) && mu > 0.0 && mu < 1.0; }

// Finite, strictly sorted grid X in [0,1] containing both endpoints, together
// with the hypothesised mean mu in (0,1).
class SampleSpace {
 public:
  SampleSpace(std::vector<double> points, double mu) : points_(std::move(points)), mu_(mu) {
    if (!valid_mean(mu_)) throw InvalidArgument("mean must lie in (0,1), got " + std::to_string(mu_));
    if (points_.size() < 2) throw InvalidArgument("sample space needs at least the points 0 and 1");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double p = points_[i];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw InvalidArgument("sample space point outside [0,1]: " + std::to_string(p));
      if (i > 0 && !(points_[i - 1] < p)) throw InvalidArgument("sample space points must be strictly increasing");
    }
    if (points_.front() != 0.0 || points_.back() != 1.0)
      throw InvalidArgument("sample space must contain 0 and 1");
  }

  // k equispaced points i/(k-1), i = 0..k-1.
  static SampleSpace equispaced(std::size_t k, double mu) {
    if (k < 2) throw InvalidArgument("equispaced grid needs k >= 2");
    std::vector<double> pts(k);
    for (std::size_t i = 0; i < k; ++i) pts[i] = static_cast<double>(i) / static_cast<double>(k - 1);
    pts.back() = 1.0;
    return SampleSpace(std::move(pts), mu);
  }

  const std::vector<double>& points() const { return points_; }
  double mu() const { return mu_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }

  std::optional<std::size_t> index_of(double x) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), x - kPointTol);
    if (it != points_.end() && std::abs(*it - x) <= kPointTol)
      return static_cast<std::size_t>(it - points_.begin());
    return std::nullopt;
  }

  bool is_mu(double x) const { return std::abs(x - mu_) <= kPointTol; }
  bool contains_mu() const { return index_of(mu_).has_value(); }

  friend bool operator==(const SampleSpace&, const SampleSpace&) = default;

 private:
  std::vector<double> points_;
  double mu_;
};

struct Atom {
  double point;
  double mass;
};

class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InvalidArgument("distribution needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (!std::isfinite(a.point) || a.point < 0.0 || a.point > 1.0)
        throw InvalidArgument("atom outside [0,1]: " + std::to_string(a.point));
      if (!std::isfinite(a.mass) || a.mass < 0.0) throw InvalidArgument("atom masses must be non-negative");
      total += a.mass;
    }
    if (std::abs(total - 1.0) > kMeasureTol)
      throw InvalidArgument("atom masses must sum to 1, got " + std::to_string(total));
    cumulative_.reserve(atoms_.size());
    double c = 0.0;
    for (const auto& a : atoms_) cumulative_.push_back(c += a.mass);
  }

  static DiscreteDistribution point(double v) { return DiscreteDistribution({{v, 1.0}}); }

  static DiscreteDistribution bernoulli(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("bernoulli parameter must lie in [0,1]");
    return DiscreteDistribution({{0.0, 1.0 - p}, {1.0, p}});
  }

  // Uniform over k equispaced points of [0,1], endpoints included.
  static DiscreteDistribution uniform_grid(std::size_t k) {
    if (k < 2) throw InvalidArgument("uniform-grid needs k >= 2");
    std::vector<Atom> atoms(k);
    for (std::size_t i = 0; i < k; ++i)
      atoms[i] = {static_cast<double>(i) / static_cast<double>(k - 1), 1.0 / static_cast<double>(k)};
    atoms.back().point = 1.0;
    return DiscreteDistribution(std::move(atoms));
  }

  const std::vector<Atom>& atoms() const { return atoms_; }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.point * a.mass;
    return m;
  }

  // Inverse-CDF lookup for u in [0,1).
  double quantile(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
      // u landed above the rounded total; take the last atom with positive mass.
      for (auto a = atoms_.rbegin(); a != atoms_.rend(); ++a)
        if (a->mass > 0.0) return a->point;
    }
    return atoms_[static_cast<std::size_t>(it - cumulative_.begin())].point;
  }

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

// Measure w*delta_a + (1-w)*delta_b.
struct TwoPointMeasure {
  double a = 0.0;
  double b = 0.0;
  double w = 1.0;

  double mean() const { return w * a + (1.0 - w) * b; }

  template <class F>
  double expectation(F&& f) const {
    double e = 0.0;
    if (w > 0.0) e += w * f(a);
    if (w < 1.0) e += (1.0 - w) * f(b);
    return e;
  }
};

// Mass that the unique mean-mu measure on {a, b} puts on a: (b-mu)/(b-a),
// with 0/0 read as 1.
inline double two_point_weight(double a, double b, double mu) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (!(lo <= mu && mu <= hi))
    throw MeanOutsideSpan("mean " + std::to_string(mu) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  if (a == b) return 1.0;
  return (b - mu) / (b - a);
}

inline TwoPointMeasure make_two_point(double a, double b, double mu) {
  return {a, b, two_point_weight(a, b, mu)};
}

// The mean-mu measure on {x, 0} (x >= mu) or {x, 1} (x < mu). Its mass on x is
// 1/F_mu(x), which is what makes F_mu the pointwise envelope of e-variables.
inline TwoPointMeasure anchored_two_point(double x, double mu) {
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("anchored_two_point needs x in [0,1]");
  if (!valid_mean(mu)) throw InvalidArgument("mean must lie in (0,1)");
  const double other = x >= mu ? 0.0 : 1.0;
  return make_two_point(x, other, mu);
}

// 64-bit mixer used to derive per-replicate seeds from a master seed:
//   z = master + (index + 1) * 0x9E3779B97F4A7C15
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z ^ (z >> 31)
inline std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform double in [0,1) from the top 53 bits of a 64-bit engine draw.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// n i.i.d. draws. Uses only the raw engine output so streams are identical
// across standard library implementations.
inline std::vector<double> sample_stream(const DiscreteDistribution& dist, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dist.quantile(unit_uniform(gen)));
  return out;
}

}  // namespace evbet

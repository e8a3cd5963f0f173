#pragma once

#include <span>
#include <vector>

#include "gse/common.hpp"

namespace gse {

// Interior probability vector: strictly positive entries summing to one,
// at least two categories.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[static_cast<std::size_t>(i)]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }

  static Distribution uniform(int k);

 private:
  std::vector<double> probs_;
};

// Canonical representative of a label-invariant distribution: entries sorted
// in decreasing order. Strictly decreasing unless `has_multiplicity()`, in
// which case adjacent ties (gap <= tie_tol) are present and preserved.
class SortedDistribution {
 public:
  explicit SortedDistribution(std::vector<double> probs, double tie_tol = kTieTol);

  int size() const { return static_cast<int>(probs_.size()); }
  double operator[](int i) const { return probs_[static_cast<std::size_t>(i)]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }
  bool has_multiplicity() const { return has_multiplicity_; }
  double tie_tol() const { return tie_tol_; }

  Distribution as_distribution() const { return Distribution(probs_); }

 private:
  std::vector<double> probs_;
  double tie_tol_;
  bool has_multiplicity_;
};

// Drops zero entries, normalizes, sorts decreasing. Ties within tie_tol are
// kept as-is and flagged, never perturbed.
SortedDistribution make_sorted(std::span<const double> weights, double tie_tol = kTieTol);

// Strictly increasing positive entropy orders.
class OrderSet {
 public:
  explicit OrderSet(std::vector<double> orders, double max_order = kMaxOrder);

  int size() const { return static_cast<int>(orders_.size()); }
  double operator[](int i) const { return orders_[static_cast<std::size_t>(i)]; }
  std::span<const double> orders() const { return orders_; }
  const std::vector<double>& vec() const { return orders_; }

  // Solver default when the caller supplies no orders: 0.5, 1.25, 2.0, ...
  // spreads across the contracting and concentrating regimes.
  static OrderSet default_orders(int count);

 private:
  std::vector<double> orders_;
};

}  // namespace gse

#include "gse/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gse {

namespace {

void check_sum_to_one(const std::vector<double>& probs) {
  double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(sum - 1.0) > kSumTol) {
    throw ValidationError("probabilities sum to " + std::to_string(sum) +
                          ", expected 1 within 1e-12");
  }
}

}  // namespace

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw ValidationError("distribution needs K >= 2 categories");
  for (double p : probs_) {
    if (!(p > 0.0) || !(p < 1.0)) {
      throw ValidationError("probability " + std::to_string(p) + " outside (0,1)");
    }
  }
  check_sum_to_one(probs_);
}

Distribution Distribution::uniform(int k) {
  if (k < 2) throw ValidationError("uniform distribution needs K >= 2");
  return Distribution(std::vector<double>(static_cast<std::size_t>(k), 1.0 / k));
}

SortedDistribution::SortedDistribution(std::vector<double> probs, double tie_tol)
    : probs_(std::move(probs)), tie_tol_(tie_tol), has_multiplicity_(false) {
  if (tie_tol_ < 0) throw ValidationError("tie_tol must be nonnegative");
  if (probs_.size() < 2) throw ValidationError("distribution needs K >= 2 categories");
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0) || !(probs_[i] < 1.0)) {
      throw ValidationError("probability " + std::to_string(probs_[i]) + " outside (0,1)");
    }
    if (i > 0) {
      double gap = probs_[i - 1] - probs_[i];
      if (gap < 0) throw ValidationError("entries not sorted decreasing");
      if (gap <= tie_tol_) has_multiplicity_ = true;
    }
  }
  check_sum_to_one(probs_);
}

SortedDistribution make_sorted(std::span<const double> weights, double tie_tol) {
  std::vector<double> kept;
  kept.reserve(weights.size());
  for (double w : weights) {
    if (w < 0) throw ValidationError("negative weight " + std::to_string(w));
    if (w > 0) kept.push_back(w);
  }
  if (kept.size() < 2) throw ValidationError("need at least two positive weights");
  double sum = std::accumulate(kept.begin(), kept.end(), 0.0);
  for (double& w : kept) w /= sum;
  std::sort(kept.begin(), kept.end(), std::greater<>());
  // Renormalization can leave the sum off by an ulp; nudge the largest entry.
  double s = std::accumulate(kept.begin(), kept.end(), 0.0);
  kept.front() += 1.0 - s;
  return SortedDistribution(std::move(kept), tie_tol);
}

OrderSet::OrderSet(std::vector<double> orders, double max_order) : orders_(std::move(orders)) {
  if (orders_.empty()) throw ValidationError("order set must be nonempty");
  double prev = 0.0;
  for (double m : orders_) {
    if (!(m > 0.0)) throw ValidationError("order " + std::to_string(m) + " not positive");
    if (m > max_order) {
      throw ValidationError("order " + std::to_string(m) + " exceeds cap " +
                            std::to_string(max_order));
    }
    if (m <= prev) throw ValidationError("orders must be strictly increasing and distinct");
    prev = m;
  }
}

OrderSet OrderSet::default_orders(int count) {
  if (count < 1) throw ValidationError("order count must be positive");
  std::vector<double> ms(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) ms[static_cast<std::size_t>(j)] = 0.5 + 0.75 * j;
  return OrderSet(std::move(ms));
}

}  // namespace gse

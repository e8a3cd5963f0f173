#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gse/entropy.hpp"

namespace gse {

// Grouped representation of a distribution with repeated values: counts
// (n_1..n_s) and strictly decreasing values (a_1..a_s), sum n_j a_j = 1.
struct MultiplicityStructure {
  std::vector<int> counts;
  std::vector<double> values;

  // Expanded K-vector with n_j copies of a_j.
  SortedDistribution expand(double tie_tol = kTieTol) const;
  void validate() const;
};

struct RecoverOptions {
  double tol = 1e-9;          // per-component signature tolerance for `converged`
  int max_restarts = 20;
  int max_iters = 200;        // per start
  std::uint64_t seed = kDefaultSeed;
  bool trace = false;
};

struct IterationRecord {
  int iteration = 0;
  double merit = 0;      // 0.5 ||F||^2
  double step_norm = 0;
  double step_scale = 0;  // accepted line-search fraction
};

struct RecoveryResult {
  SortedDistribution distribution;
  double residual_norm = 0;  // ||signature - target||_inf at the solution
  int iterations = 0;        // of the winning start
  int restarts_used = 0;
  bool converged = false;
  bool multiplicity_flag = false;  // solution within tie_tol of a stratum
  double jacobian_sigma_min = 0;   // smallest singular value at the solution
  std::vector<IterationRecord> trace;
};

// Recover a sorted distribution from its signature; needs |M| >= K-1
// (refused below that -- the map is not injective there). Damped
// Gauss-Newton on the chart residual with analytic Jacobian, multi-start
// from sorted Dirichlet draws.
RecoveryResult recover(int k, const OrderSet& orders, const GseSignature& target,
                       const RecoverOptions& opts = {});

// Binary case: the unique (p, 1-p), p in (1/2, 1), with H^(m) = h, found by
// bisection on the strictly decreasing entropy map. h = ln 2 returns the
// uniform pair flagged with multiplicity.
SortedDistribution recover_binary(double m, double h);

struct MultiplicityRecovery {
  MultiplicityStructure structure;
  double residual_norm = 0;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
};

// Recover the distinct values (a_1..a_s) of a known multiplicity structure
// from a signature with |M| >= s-1 orders, in the chart (a_2..a_s) with
// a_1 = (1 - sum_{j>=2} n_j a_j) / n_1.
MultiplicityRecovery recover_multiplicity(std::span<const int> counts, const OrderSet& orders,
                                          const GseSignature& target,
                                          const RecoverOptions& opts = {});

// Greedy left-to-right grouping of entries whose consecutive gaps are <= tol;
// group values are means, renormalized so sum n_j a_j = 1.
MultiplicityStructure detect_multiplicity(const SortedDistribution& p, double tol);

}  // namespace gse

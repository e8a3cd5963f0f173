#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gse/entropy.hpp"
#include "gse/rng.hpp"

namespace gse {

// Chart Jacobian of the signature map at a strictly sorted point: rows are
// orders (increasing), columns are categories 2..K, entry(j,k) =
// m_j^2 p_1^{m_j-1} / S(m_j) * Phi_{m_j}(u_k) with u_k = ln(p_k / p_1).
struct JacobianMatrix {
  Eigen::MatrixXd entries;
  OrderSet row_orders;
  std::vector<int> col_categories;  // 2..K
  SortedDistribution at_point;
};

JacobianMatrix jacobian(const SortedDistribution& p, const OrderSet& orders);

// Minor positivity verdicts use tol = abs + rel * (max |entry|)^k. A minor
// above tol counts positive, below -tol negative, in between indeterminate.
struct MinorTolerance {
  double rel = 1e-10;
  double abs = 0.0;
  double threshold(double max_entry, int k) const;
};

enum class MinorSign { Positive, Indeterminate, Negative };

struct MinorReport {
  int dimension = 0;          // largest minor size enumerated
  double min_minor = 0;       // minimum canonically oriented principal minor
  std::vector<int> argmin_rows;  // order indices (0-based) of the minimum
  std::vector<int> argmin_cols;  // category labels (2..K) of the minimum
  bool all_positive = false;
  double tolerance = 0;       // threshold that applied to the argmin minor
  long long samples = 1;
  std::uint64_t seed = 0;
  long long minors_checked = 0;
  long long negative_count = 0;
  long long indeterminate_count = 0;
  // Same tallies over every square minor (row set independent of column
  // set), which is the stronger family the determinant structure speaks to.
  long long square_minors_checked = 0;
  long long square_negative_count = 0;
  long long square_indeterminate_count = 0;
  double square_min_minor = 0;
  // Minimum over the nested family (columns = categories 2..k+1). This is
  // the family the evaluation-determinant positivity actually covers.
  double min_leading_minor = 0;
  long long leading_negative_count = 0;
  long long argmin_sample = 0;
};

// Canonically oriented minor: rows sorted by increasing order, columns by
// increasing u (descending category), so the determinant-positivity
// structure carries no alternating sign. `rows`/`cols` are 0-based row and
// column indices into `entries`.
double oriented_minor(const JacobianMatrix& j, std::span<const int> rows,
                      std::span<const int> cols);

// All 2^(K-1)-1 canonically oriented principal minors (plus the all-square
// and leading families). Requires square J and K-1 <= 14.
MinorReport principal_minors(const JacobianMatrix& j, const MinorTolerance& tol = {});

// det[e^{x_i u_j}] for strictly increasing xs and us, computed after
// factoring row/column maxima out of the exponents. Strictly positive for
// strictly increasing arguments.
double exp_kernel_det(std::span<const double> xs, std::span<const double> us);

struct EctDeterminant {
  double value = 0;         // canonically oriented determinant
  double raw_value = 0;     // natural category-order determinant
  MinorSign sign = MinorSign::Indeterminate;
  double tolerance = 0;
};

// Evaluation determinant det[Phi_{m_a}(u_{col_b})] over the given categories,
// canonically oriented. Positivity is guaranteed by the structure only when
// `cols` is a leading block {2,..,k+1}; for other column sets the verdict is
// an honest measurement (see tests for a pinned counterexample).
EctDeterminant ect_eval_det(const SortedDistribution& p, const OrderSet& orders_sub,
                            std::span<const int> cols, const MinorTolerance& tol = {});

// Fiedler-Ptak necessary-condition sampler on a plain square matrix: checks
// max_i w_i (A w)_i > 0 for the K-1 basis vectors plus `trials` random w.
bool fiedler_ptak_check(const Eigen::MatrixXd& a, int trials, std::uint64_t seed,
                        Eigen::VectorXd* violation = nullptr);

// Same check on the canonical orientation of a chart Jacobian.
bool fiedler_ptak_check(const JacobianMatrix& j, int trials, std::uint64_t seed,
                        Eigen::VectorXd* violation = nullptr);

// Sorted interior sample: symmetric Dirichlet(1), sorted decreasing,
// rejected until all consecutive gaps exceed min_gap.
SortedDistribution sample_sorted_interior(int k, RandomStream& stream, double min_gap = 1e-6,
                                          int max_tries = 10000);

// Strictly increasing orders drawn uniformly from [lo, hi], rejected until
// all pair gaps exceed min_gap.
OrderSet sample_orders(int count, double lo, double hi, double min_gap, RandomStream& stream,
                       int max_tries = 10000);

// Randomized minor-positivity sweep over `samples` interior points with
// per-point derived RNG streams; results are identical for any worker
// count. |orders| must equal K-1.
MinorReport sweep_pmatrix(int k, const OrderSet& orders, int samples, std::uint64_t seed,
                          int workers = 0, const MinorTolerance& tol = {});

}  // namespace gse

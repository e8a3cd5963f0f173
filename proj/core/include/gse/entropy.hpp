#pragma once

#include <span>
#include <vector>

#include "gse/distribution.hpp"

namespace gse {

// Scalar machinery of a distribution at one order m: the power sum
// S(m) = sum p_i^m, y = ln S, the escort mean of ln p_i (mu), and the
// centered quantities alpha = mu - ln p_max (<= 0) and
// alpha' = Var_escort(ln p_i) (>= 0).
struct ScalarProfile {
  double order = 0;
  double power_sum = 0;
  double log_power_sum = 0;
  double escort_mean_log = 0;
  double alpha = 0;
  double alpha_prime = 0;
};

struct GseSignature {
  OrderSet orders;
  std::vector<double> values;  // nats
};

// Escort distribution of order m: entries p_i^m / sum_j p_j^m, evaluated in
// the log domain.
Distribution escort(const Distribution& p, double m);

// Generalized Shannon entropy H^(m)(p) = y(m) - m*mu(m), in nats.
double gse(const Distribution& p, double m);

// Componentwise gse over an order set.
GseSignature gse_signature(const Distribution& p, const OrderSet& orders);

// Unconstrained partial derivatives of H^(m): entry k is
// m^2 p_k^{m-1} / S(m) * (mu(m) - ln p_k).
std::vector<double> gse_gradient(const Distribution& p, double m);

// Phi_m(u) = (alpha - u) e^{(m-1)u} - alpha for u <= 0. The sign kernel of
// the chart Jacobian.
double phi(double m, double u, double alpha);

ScalarProfile scalar_profile(const SortedDistribution& p, double m);

// Plain Shannon entropy, nats.
double shannon(const Distribution& p);

namespace detail {

// Profile of an arbitrary positive vector (not necessarily normalized).
// The GSE formulas are normalization-free, which the solvers and the
// finite-difference oracles in the tests rely on.
ScalarProfile raw_profile(std::span<const double> weights, double m);

double raw_gse(std::span<const double> weights, double m);

}  // namespace detail

}  // namespace gse

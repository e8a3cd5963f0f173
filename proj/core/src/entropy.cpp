#include "gse/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gse {

namespace detail {

ScalarProfile raw_profile(std::span<const double> weights, double m) {
  if (!(m > 0.0)) throw ValidationError("order must be positive");
  const std::size_t n = weights.size();
  // Shift by m * max log before exponentiating; one pass supplies S, mu and
  // the escort variance with consistent weights.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = std::log(weights[i]);
    if (logs[i] > max_log) max_log = logs[i];
  }
  double s_shift = 0.0;
  double mu_num = 0.0;
  double m2_num = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = std::exp(m * (logs[i] - max_log));
    s_shift += e;
    mu_num += e * logs[i];
    m2_num += e * logs[i] * logs[i];
  }
  ScalarProfile out;
  out.order = m;
  out.log_power_sum = m * max_log + std::log(s_shift);
  out.power_sum = std::exp(out.log_power_sum);
  out.escort_mean_log = mu_num / s_shift;
  out.alpha = out.escort_mean_log - max_log;
  double var = m2_num / s_shift - out.escort_mean_log * out.escort_mean_log;
  out.alpha_prime = var > 0.0 ? var : 0.0;
  return out;
}

double raw_gse(std::span<const double> weights, double m) {
  ScalarProfile sp = raw_profile(weights, m);
  return sp.log_power_sum - m * sp.escort_mean_log;
}

}  // namespace detail

Distribution escort(const Distribution& p, double m) {
  if (!(m > 0.0)) throw ValidationError("order must be positive");
  const int k = p.size();
  std::vector<double> out(static_cast<std::size_t>(k));
  double max_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) max_log = std::max(max_log, std::log(p[i]));
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(m * (std::log(p[i]) - max_log));
    sum += out[static_cast<std::size_t>(i)];
  }
  for (double& w : out) w /= sum;
  return Distribution(std::move(out));
}

double gse(const Distribution& p, double m) { return detail::raw_gse(p.probs(), m); }

GseSignature gse_signature(const Distribution& p, const OrderSet& orders) {
  std::vector<double> values(static_cast<std::size_t>(orders.size()));
  for (int j = 0; j < orders.size(); ++j) {
    values[static_cast<std::size_t>(j)] = gse(p, orders[j]);
  }
  return GseSignature{orders, std::move(values)};
}

std::vector<double> gse_gradient(const Distribution& p, double m) {
  if (!(m > 0.0)) throw ValidationError("order must be positive");
  ScalarProfile sp = detail::raw_profile(p.probs(), m);
  const int k = p.size();
  std::vector<double> g(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    double lp = std::log(p[i]);
    // m^2 p_i^{m-1} / S, with the power computed against ln S to stay stable
    // for large m and tiny p_i.
    double pref = m * m * std::exp((m - 1.0) * lp - sp.log_power_sum);
    g[static_cast<std::size_t>(i)] = pref * (sp.escort_mean_log - lp);
  }
  return g;
}

double phi(double m, double u, double alpha) {
  if (!(m > 0.0)) throw ValidationError("order must be positive");
  if (u > 0.0) throw ValidationError("phi argument u must be nonpositive");
  return (alpha - u) * std::exp((m - 1.0) * u) - alpha;
}

ScalarProfile scalar_profile(const SortedDistribution& p, double m) {
  return detail::raw_profile(p.probs(), m);
}

double shannon(const Distribution& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) h -= p[i] * std::log(p[i]);
  return h;
}

}  // namespace gse

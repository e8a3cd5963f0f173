#include "gse/inverse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gse/rng.hpp"

namespace gse {

namespace {

constexpr double kStopResidual = 1e-11;  // ||F||_inf
constexpr double kStopStep = 1e-14;
constexpr double kArmijoC = 1e-4;

// Chart Jacobian on a descending (not necessarily strictly) vector; ties
// produce zero columns, which the least-squares fallback tolerates.
Eigen::MatrixXd chart_jacobian_raw(std::span<const double> p, const OrderSet& orders) {
  const int k = static_cast<int>(p.size());
  const int r = orders.size();
  Eigen::MatrixXd jac(r, k - 1);
  const double log_p1 = std::log(p[0]);
  for (int j = 0; j < r; ++j) {
    const double m = orders[j];
    ScalarProfile sp = detail::raw_profile(p, m);
    const double pref = m * m * std::exp((m - 1.0) * log_p1 - sp.log_power_sum);
    for (int c = 1; c < k; ++c) {
      double u = std::log(p[static_cast<std::size_t>(c)]) - log_p1;
      jac(j, c - 1) = pref * ((sp.alpha - u) * std::exp((m - 1.0) * u) - sp.alpha);
    }
  }
  return jac;
}

Eigen::VectorXd residual_at(std::span<const double> p, const OrderSet& orders,
                            const std::vector<double>& target) {
  Eigen::VectorXd f(orders.size());
  for (int j = 0; j < orders.size(); ++j) {
    f(j) = detail::raw_gse(p, orders[j]) - target[static_cast<std::size_t>(j)];
  }
  return f;
}

// Gauss-Newton direction with a least-squares fallback and optional
// Levenberg damping.
Eigen::VectorXd solve_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& f, double lambda) {
  if (lambda > 0.0) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal().array() += lambda * (jtj.trace() / jtj.rows() + 1e-300);
    return damped.ldlt().solve(-jac.transpose() * f);
  }
  if (jac.rows() == jac.cols()) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    Eigen::VectorXd step = lu.solve(-f);
    if (step.allFinite()) return step;
  }
  return jac.colPivHouseholderQr().solve(-f);
}

struct StartOutcome {
  std::vector<double> point;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

// Damped Gauss-Newton over the full simplex; the state is the whole
// probability vector, re-sorted after every accepted step (the signature is
// permutation-invariant, so sorting never changes the merit).
StartOutcome run_start(std::vector<double> p, const OrderSet& orders,
                       const std::vector<double>& target, const RecoverOptions& opts) {
  const int k = static_cast<int>(p.size());
  StartOutcome out;
  Eigen::VectorXd f = residual_at(p, orders, target);
  double merit = 0.5 * f.squaredNorm();
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    if (f.cwiseAbs().maxCoeff() <= kStopResidual) break;
    Eigen::MatrixXd jac = chart_jacobian_raw(p, orders);
    bool advanced = false;
    for (double lambda : {0.0, 1e-6, 1e-3, 1e-1, 10.0}) {
      Eigen::VectorXd delta = solve_step(jac, f, lambda);
      if (!delta.allFinite()) continue;
      // Full-space direction; the leading coordinate absorbs the chart sum.
      std::vector<double> dir(static_cast<std::size_t>(k));
      dir[0] = -delta.sum();
      for (int i = 1; i < k; ++i) dir[static_cast<std::size_t>(i)] = delta(i - 1);
      // Largest step keeping every entry above the floor.
      double theta = 1.0;
      for (int i = 0; i < k; ++i) {
        if (dir[static_cast<std::size_t>(i)] < 0.0) {
          double room = (p[static_cast<std::size_t>(i)] - kBoundaryFloor) /
                        (-dir[static_cast<std::size_t>(i)]);
          theta = std::min(theta, room);
        }
      }
      if (theta <= 0.0) continue;
      const double dir_deriv = (jac.transpose() * f).dot(delta);
      std::vector<double> cand(static_cast<std::size_t>(k));
      for (int ls = 0; ls < 60; ++ls) {
        for (int i = 0; i < k; ++i) {
          cand[static_cast<std::size_t>(i)] =
              p[static_cast<std::size_t>(i)] + theta * dir[static_cast<std::size_t>(i)];
        }
        Eigen::VectorXd fc = residual_at(cand, orders, target);
        double mc = 0.5 * fc.squaredNorm();
        bool ok = dir_deriv < 0.0 ? (mc <= merit + kArmijoC * theta * dir_deriv) : (mc < merit);
        if (ok) {
          double step_norm = 0.0;
          for (int i = 0; i < k; ++i) {
            step_norm = std::max(step_norm, std::abs(theta * dir[static_cast<std::size_t>(i)]));
          }
          p = cand;
          std::sort(p.begin(), p.end(), std::greater<>());
          f = residual_at(p, orders, target);
          merit = 0.5 * f.squaredNorm();
          if (opts.trace) out.trace.push_back({iter, merit, step_norm, theta});
          advanced = step_norm > kStopStep;
          break;
        }
        theta *= 0.5;
        if (theta < 1e-16) break;
      }
      if (advanced) break;
    }
    if (!advanced) break;
  }
  out.point = std::move(p);
  out.residual = f.cwiseAbs().maxCoeff();
  out.iterations = iter;
  return out;
}

std::vector<double> start_point(int k, int start_index, RandomStream& stream) {
  std::vector<double> p(static_cast<std::size_t>(k));
  if (start_index == 0) {
    // Triangular profile: strictly decreasing, well interior.
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      p[static_cast<std::size_t>(i)] = static_cast<double>(k - i);
      sum += p[static_cast<std::size_t>(i)];
    }
    for (double& x : p) x /= sum;
    return p;
  }
  p = stream.dirichlet1(k);
  std::sort(p.begin(), p.end(), std::greater<>());
  for (double& x : p) x = std::max(x, 1e-12);
  double sum = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= sum;
  return p;
}

void validate_target(const OrderSet& orders, const GseSignature& target, double ln_k) {
  if (target.orders.size() != orders.size()) {
    throw ValidationError("target signature has a different number of orders than M");
  }
  for (int j = 0; j < orders.size(); ++j) {
    if (target.orders[j] != orders[j]) {
      throw ValidationError("target signature orders do not match M");
    }
  }
  for (double v : target.values) {
    if (!(v >= -1e-9) || !(v <= ln_k + 1e-9)) {
      throw ValidationError("target value " + std::to_string(v) + " outside [0, ln K]");
    }
  }
}

}  // namespace

RecoveryResult recover(int k, const OrderSet& orders, const GseSignature& target,
                       const RecoverOptions& opts) {
  if (k < 2) throw ValidationError("K must be at least 2");
  if (orders.size() < k - 1) {
    throw ValidationError(
        "under-determined: |M| < K-1 gives a non-injective signature map; "
        "use the witness command to exhibit collisions instead");
  }
  const double ln_k = std::log(static_cast<double>(k));
  validate_target(orders, target, ln_k);

  // A signature pinned at ln K in every component forces the uniform
  // distribution; the chart Jacobian vanishes there, so handle it directly.
  bool uniform_target = true;
  for (double v : target.values) {
    if (std::abs(v - ln_k) > std::max(opts.tol, 1e-12)) uniform_target = false;
  }
  if (uniform_target) {
    RecoveryResult res{SortedDistribution(std::vector<double>(static_cast<std::size_t>(k), 1.0 / k))};
    res.residual_norm = 0.0;
    for (int j = 0; j < orders.size(); ++j) {
      res.residual_norm =
          std::max(res.residual_norm, std::abs(target.values[static_cast<std::size_t>(j)] - ln_k));
    }
    res.converged = res.residual_norm <= opts.tol;
    res.multiplicity_flag = true;
    return res;
  }

  StartOutcome best;
  int best_start = -1;
  for (int start = 0; start < opts.max_restarts; ++start) {
    RandomStream stream = RandomStream::derived(opts.seed, static_cast<std::uint64_t>(start));
    StartOutcome outcome = run_start(start_point(k, start, stream), orders, target.values, opts);
    if (outcome.residual < best.residual) {
      best = std::move(outcome);
      best_start = start;
    }
    if (best.residual <= kStopResidual) break;
  }

  // Nudge the sum back onto the simplex before constructing the result; the
  // iterates only preserve it to rounding.
  double sum = std::accumulate(best.point.begin(), best.point.end(), 0.0);
  for (double& x : best.point) x /= sum;
  double s2 = std::accumulate(best.point.begin(), best.point.end(), 0.0);
  best.point.front() += 1.0 - s2;

  RecoveryResult res{SortedDistribution(best.point)};
  res.residual_norm = best.residual;
  res.iterations = best.iterations;
  res.restarts_used = best_start + 1;
  res.converged = best.residual <= opts.tol;
  res.multiplicity_flag = res.distribution.has_multiplicity();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(chart_jacobian_raw(best.point, orders));
  res.jacobian_sigma_min = svd.singularValues().minCoeff();
  res.trace = std::move(best.trace);
  return res;
}

SortedDistribution recover_binary(double m, double h) {
  if (!(m > 0.0)) throw ValidationError("order must be positive");
  const double ln2 = std::log(2.0);
  if (h < 0.0 || h > ln2 + 1e-12) {
    throw ValidationError("binary entropy must lie in [0, ln 2]");
  }
  if (h >= ln2 - 1e-15) {
    return SortedDistribution({0.5, 0.5});
  }
  double lo = 0.5, hi = 1.0 - 1e-16;
  auto value = [&](double p) {
    const double pair[2] = {p, 1.0 - p};
    return detail::raw_gse(pair, m);
  };
  // H^(m)((p,1-p)) is strictly decreasing on (1/2, 1); bisect to the last
  // representable bracket.
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (value(mid) > h) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double p = 0.5 * (lo + hi);
  return SortedDistribution({p, 1.0 - p});
}

void MultiplicityStructure::validate() const {
  if (counts.empty() || counts.size() != values.size()) {
    throw ValidationError("multiplicity structure needs matching counts and values");
  }
  double mass = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 1) throw ValidationError("multiplicity counts must be positive");
    if (!(values[j] > 0.0)) throw ValidationError("multiplicity values must be positive");
    if (!(values[j] < prev)) throw ValidationError("multiplicity values must be strictly decreasing");
    prev = values[j];
    mass += counts[j] * values[j];
  }
  if (std::abs(mass - 1.0) > kSumTol) {
    throw ValidationError("multiplicity structure mass " + std::to_string(mass) + " != 1");
  }
}

SortedDistribution MultiplicityStructure::expand(double tie_tol) const {
  validate();
  std::vector<double> probs;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    for (int c = 0; c < counts[j]; ++c) probs.push_back(values[j]);
  }
  return SortedDistribution(std::move(probs), tie_tol);
}

namespace {

// Signature of a grouped vector without expanding it.
double grouped_gse(std::span<const int> counts, std::span<const double> values, double m) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double a : values) max_log = std::max(max_log, std::log(a));
  double s = 0.0, mu_num = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    double lv = std::log(values[j]);
    double e = counts[j] * std::exp(m * (lv - max_log));
    s += e;
    mu_num += e * lv;
  }
  double y = m * max_log + std::log(s);
  return y - m * (mu_num / s);
}

struct GroupState {
  std::vector<double> values;  // strictly decreasing
};

Eigen::VectorXd grouped_residual(std::span<const int> counts, const std::vector<double>& a,
                                 const OrderSet& orders, const std::vector<double>& target) {
  Eigen::VectorXd f(orders.size());
  for (int j = 0; j < orders.size(); ++j) {
    f(j) = grouped_gse(counts, a, orders[j]) - target[static_cast<std::size_t>(j)];
  }
  return f;
}

// d H^(m) / d a_j in the chart (a_2..a_s): n_j (g(a_j) - g(a_1)) with
// g(x) = m^2 x^{m-1} / S * (mu - ln x).
Eigen::MatrixXd grouped_jacobian(std::span<const int> counts, const std::vector<double>& a,
                                 const OrderSet& orders) {
  const int s = static_cast<int>(a.size());
  Eigen::MatrixXd jac(orders.size(), s - 1);
  for (int row = 0; row < orders.size(); ++row) {
    const double m = orders[row];
    double max_log = std::log(a[0]);
    double ssum = 0.0, mu_num = 0.0;
    for (int j = 0; j < s; ++j) {
      double lv = std::log(a[static_cast<std::size_t>(j)]);
      double e = counts[static_cast<std::size_t>(j)] * std::exp(m * (lv - max_log));
      ssum += e;
      mu_num += e * lv;
    }
    double log_s = m * max_log + std::log(ssum);
    double mu = mu_num / ssum;
    auto g = [&](double x) {
      double lx = std::log(x);
      return m * m * std::exp((m - 1.0) * lx - log_s) * (mu - lx);
    };
    double g1 = g(a[0]);
    for (int j = 1; j < s; ++j) {
      jac(row, j - 1) = counts[static_cast<std::size_t>(j)] * (g(a[static_cast<std::size_t>(j)]) - g1);
    }
  }
  return jac;
}

}  // namespace

MultiplicityRecovery recover_multiplicity(std::span<const int> counts, const OrderSet& orders,
                                          const GseSignature& target,
                                          const RecoverOptions& opts) {
  const int s = static_cast<int>(counts.size());
  if (s < 1) throw ValidationError("multiplicity counts must be nonempty");
  int total = 0;
  for (int n : counts) {
    if (n < 1) throw ValidationError("multiplicity counts must be positive");
    total += n;
  }
  if (total < 2) throw ValidationError("expanded distribution needs K >= 2");
  if (orders.size() < s - 1) {
    throw ValidationError("under-determined: |M| < s-1 for the given multiplicity structure");
  }
  const double ln_k = std::log(static_cast<double>(total));
  validate_target(orders, target, ln_k);

  if (s == 1) {
    MultiplicityRecovery res;
    res.structure = MultiplicityStructure{{counts[0]}, {1.0 / counts[0]}};
    res.residual_norm = 0.0;
    for (double v : target.values) {
      res.residual_norm = std::max(res.residual_norm, std::abs(v - ln_k));
    }
    res.converged = res.residual_norm <= opts.tol;
    return res;
  }

  std::vector<int> n(counts.begin(), counts.end());
  auto project = [&](std::vector<double> a) {
    // Rescale so sum n_j a_j = 1.
    double mass = 0.0;
    for (int j = 0; j < s; ++j) mass += n[static_cast<std::size_t>(j)] * a[static_cast<std::size_t>(j)];
    for (double& x : a) x /= mass;
    return a;
  };

  MultiplicityRecovery best;
  best.residual_norm = std::numeric_limits<double>::infinity();
  for (int start = 0; start < opts.max_restarts; ++start) {
    RandomStream stream = RandomStream::derived(opts.seed, 0x9e00 + static_cast<std::uint64_t>(start));
    std::vector<double> a(static_cast<std::size_t>(s));
    if (start == 0) {
      for (int j = 0; j < s; ++j) a[static_cast<std::size_t>(j)] = static_cast<double>(s - j);
    } else {
      a = stream.dirichlet1(s);
      std::sort(a.begin(), a.end(), std::greater<>());
    }
    a = project(a);

    Eigen::VectorXd f = grouped_residual(n, a, orders, target.values);
    double merit = 0.5 * f.squaredNorm();
    int iter = 0;
    for (; iter < opts.max_iters; ++iter) {
      if (f.cwiseAbs().maxCoeff() <= kStopResidual) break;
      Eigen::MatrixXd jac = grouped_jacobian(n, a, orders);
      bool advanced = false;
      for (double lambda : {0.0, 1e-6, 1e-3, 1e-1, 10.0}) {
        Eigen::VectorXd delta = solve_step(jac, f, lambda);
        if (!delta.allFinite()) continue;
        std::vector<double> dir(static_cast<std::size_t>(s));
        double weighted = 0.0;
        for (int j = 1; j < s; ++j) weighted += n[static_cast<std::size_t>(j)] * delta(j - 1);
        dir[0] = -weighted / n[0];
        for (int j = 1; j < s; ++j) dir[static_cast<std::size_t>(j)] = delta(j - 1);
        // Stay strictly inside the stratum: positive values, decreasing order.
        double theta = 1.0;
        for (int j = 0; j < s; ++j) {
          if (dir[static_cast<std::size_t>(j)] < 0.0) {
            theta = std::min(theta, (a[static_cast<std::size_t>(j)] - kBoundaryFloor) /
                                        (-dir[static_cast<std::size_t>(j)]));
          }
        }
        for (int j = 0; j + 1 < s; ++j) {
          double gap = a[static_cast<std::size_t>(j)] - a[static_cast<std::size_t>(j + 1)];
          double dgap = dir[static_cast<std::size_t>(j)] - dir[static_cast<std::size_t>(j + 1)];
          if (dgap < 0.0) theta = std::min(theta, (gap - kBoundaryFloor) / (-dgap));
        }
        if (theta <= 0.0) continue;
        const double dir_deriv = (jac.transpose() * f).dot(delta);
        for (int ls = 0; ls < 60; ++ls) {
          std::vector<double> cand(static_cast<std::size_t>(s));
          for (int j = 0; j < s; ++j) {
            cand[static_cast<std::size_t>(j)] =
                a[static_cast<std::size_t>(j)] + theta * dir[static_cast<std::size_t>(j)];
          }
          Eigen::VectorXd fc = grouped_residual(n, cand, orders, target.values);
          double mc = 0.5 * fc.squaredNorm();
          bool ok = dir_deriv < 0.0 ? (mc <= merit + kArmijoC * theta * dir_deriv) : (mc < merit);
          if (ok) {
            double step_norm = 0.0;
            for (int j = 0; j < s; ++j) {
              step_norm = std::max(step_norm, std::abs(theta * dir[static_cast<std::size_t>(j)]));
            }
            a = cand;
            f = fc;
            merit = mc;
            advanced = step_norm > kStopStep;
            break;
          }
          theta *= 0.5;
          if (theta < 1e-16) break;
        }
        if (advanced) break;
      }
      if (!advanced) break;
    }
    double res_norm = f.cwiseAbs().maxCoeff();
    if (res_norm < best.residual_norm) {
      best.residual_norm = res_norm;
      best.iterations = iter;
      best.restarts_used = start + 1;
      best.structure = MultiplicityStructure{n, project(a)};
    }
    if (best.residual_norm <= kStopResidual) break;
  }
  best.converged = best.residual_norm <= opts.tol;
  return best;
}

MultiplicityStructure detect_multiplicity(const SortedDistribution& p, double tol) {
  if (tol < 0) throw ValidationError("tolerance must be nonnegative");
  MultiplicityStructure out;
  const int k = p.size();
  int group_start = 0;
  for (int i = 1; i <= k; ++i) {
    if (i == k || p[i - 1] - p[i] > tol) {
      int n = i - group_start;
      double mean = 0.0;
      for (int j = group_start; j < i; ++j) mean += p[j];
      mean /= n;
      out.counts.push_back(n);
      out.values.push_back(mean);
      group_start = i;
    }
  }
  // Group means already sum to one up to rounding; renormalize exactly.
  double mass = 0.0;
  for (std::size_t j = 0; j < out.counts.size(); ++j) mass += out.counts[j] * out.values[j];
  for (double& v : out.values) v /= mass;
  return out;
}

}  // namespace gse

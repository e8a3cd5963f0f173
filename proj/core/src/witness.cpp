#include "gse/witness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gse {

namespace {

constexpr double kInteriorFloor = 1e-13;
constexpr double kSortGap = 0.0;  // walks may approach strata but not cross

Eigen::VectorXd signature_vec(std::span<const double> p, const OrderSet& orders) {
  Eigen::VectorXd y(orders.size());
  for (int j = 0; j < orders.size(); ++j) y(j) = detail::raw_gse(p, orders[j]);
  return y;
}

Eigen::MatrixXd chart_jacobian(std::span<const double> p, const OrderSet& orders) {
  const int k = static_cast<int>(p.size());
  Eigen::MatrixXd jac(orders.size(), k - 1);
  const double log_p1 = std::log(p[0]);
  for (int j = 0; j < orders.size(); ++j) {
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

bool interior_sorted(const std::vector<double>& p) {
  if (p.front() >= 1.0) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= kInteriorFloor) return false;
    if (i > 0 && !(p[i - 1] - p[i] > kSortGap)) return false;
  }
  return true;
}

std::vector<double> to_full(const Eigen::VectorXd& x) {
  std::vector<double> p(static_cast<std::size_t>(x.size()) + 1);
  p[0] = 1.0 - x.sum();
  for (Eigen::Index i = 0; i < x.size(); ++i) p[static_cast<std::size_t>(i) + 1] = x(i);
  return p;
}

// Minimum-norm Gauss-Newton corrector back onto T_M(x) = y, with simple
// step damping. Returns false if it cannot reach corrector_tol inside Δ↓.
bool correct(Eigen::VectorXd& x, const OrderSet& orders, const Eigen::VectorXd& y, double tol) {
  for (int it = 0; it < 60; ++it) {
    std::vector<double> p = to_full(x);
    if (!interior_sorted(p)) return false;
    Eigen::VectorXd f = signature_vec(p, orders) - y;
    if (f.cwiseAbs().maxCoeff() <= tol) return true;
    Eigen::MatrixXd jac = chart_jacobian(p, orders);
    Eigen::VectorXd delta =
        jac.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-f);
    if (!delta.allFinite()) return false;
    double base = f.squaredNorm();
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Eigen::VectorXd cand = x + t * delta;
      std::vector<double> pc = to_full(cand);
      if (interior_sorted(pc)) {
        Eigen::VectorXd fc = signature_vec(pc, orders) - y;
        if (fc.squaredNorm() < base) {
          x = cand;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) return false;
  }
  return false;
}

// Orthonormal null-space basis of the chart Jacobian, deterministic sign
// (first nonzero component positive).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& jac, double rel_tol = 1e-12) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * smax) ++rank;
  }
  Eigen::MatrixXd v = svd.matrixV();
  Eigen::MatrixXd null = v.rightCols(v.cols() - rank);
  for (Eigen::Index c = 0; c < null.cols(); ++c) {
    for (Eigen::Index r = 0; r < null.rows(); ++r) {
      if (std::abs(null(r, c)) > 1e-12) {
        if (null(r, c) < 0) null.col(c) = -null.col(c);
        break;
      }
    }
  }
  return null;
}

struct WalkResult {
  Eigen::VectorXd x;
  double separation = 0;
  bool reached = false;
};

// March along the level set from x0 until the full-vector infinity
// separation from p0 meets min_sep or the walk runs out of domain.
WalkResult walk(const Eigen::VectorXd& x0, const std::vector<double>& p0, const OrderSet& orders,
                const Eigen::VectorXd& y, double min_sep, double direction,
                const WitnessOptions& opts) {
  WalkResult best;
  best.x = x0;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd prev;
  double h = opts.predictor_step;
  for (int step = 0; step < opts.max_steps; ++step) {
    std::vector<double> p = to_full(x);
    Eigen::MatrixXd null = null_space(chart_jacobian(p, orders));
    if (null.cols() == 0) break;
    Eigen::VectorXd v = null.col(0);
    if (prev.size() == 0) {
      v *= direction;
    } else if (v.dot(prev) < 0) {
      v = -v;
    }
    Eigen::VectorXd cand = x + h * v;
    if (!correct(cand, orders, y, opts.corrector_tol)) {
      h *= 0.5;
      if (h < 1e-7) break;
      continue;
    }
    x = cand;
    prev = v;
    h = std::min(h * 1.3, opts.predictor_step);
    std::vector<double> q = to_full(x);
    double sep = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) sep = std::max(sep, std::abs(q[i] - p0[i]));
    if (sep > best.separation) {
      best.separation = sep;
      best.x = x;
    }
    if (sep >= min_sep) {
      best.reached = true;
      return best;
    }
  }
  return best;
}

}  // namespace

CollisionPair find_collision(int k, const OrderSet& orders, double min_separation,
                             const WitnessOptions& opts) {
  if (k < 3) throw ValidationError("collisions need K >= 3");
  if (orders.size() > k - 2) {
    throw ValidationError("|M| >= K-1 is the injective regime: no collision exists; "
                          "use recover instead");
  }
  if (!(min_separation > 0.0) || min_separation > 0.2) {
    throw ValidationError("min_separation must lie in (0, 0.2]");
  }

  // Ladder schedule: the skew-ray form eps_k = eps * rho^(k-2); larger eps
  // moves the start inward where the level set is long enough to reach the
  // requested separation.
  for (double eps : {0.05, 0.1, 0.2, 0.3, 0.4}) {
    for (double rho : {0.4, 0.6}) {
      std::vector<double> ladder(static_cast<std::size_t>(k - 1));
      for (int i = 0; i < k - 1; ++i) ladder[static_cast<std::size_t>(i)] = eps * std::pow(rho, i);
      double head = 1.0 - std::accumulate(ladder.begin(), ladder.end(), 0.0);
      std::vector<double> p0(static_cast<std::size_t>(k));
      p0[0] = head;
      std::copy(ladder.begin(), ladder.end(), p0.begin() + 1);
      if (!interior_sorted(p0)) continue;

      Eigen::VectorXd x0(k - 1);
      for (int i = 0; i < k - 1; ++i) x0(i) = p0[static_cast<std::size_t>(i) + 1];
      Eigen::VectorXd y = signature_vec(p0, orders);

      for (double direction : {+1.0, -1.0}) {
        WalkResult res = walk(x0, p0, orders, y, min_separation, direction, opts);
        if (!res.reached) continue;
        std::vector<double> q = to_full(res.x);
        Eigen::VectorXd yq = signature_vec(q, orders);
        double gap = (yq - y).cwiseAbs().maxCoeff();
        if (gap > 1e-10) continue;
        double sep = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) sep = std::max(sep, std::abs(q[i] - p0[i]));
        CollisionPair pair{SortedDistribution(p0), SortedDistribution(q), gap, sep, eps, rho};
        return pair;
      }
    }
  }
  throw ComputationError("continuation left the sorted simplex before reaching min_separation");
}

std::vector<SortedDistribution> level_set_trace(int k, const OrderSet& orders,
                                                const SortedDistribution& start, int steps,
                                                double step_size, const WitnessOptions& opts) {
  if (start.size() != k) throw ValidationError("start distribution has wrong K");
  if (orders.size() > k - 2) {
    throw ValidationError("|M| <= K-2 required for a nontrivial level set");
  }
  if (steps < 0) throw ValidationError("steps must be nonnegative");
  if (!(step_size > 0.0)) throw ValidationError("step_size must be positive");

  std::vector<SortedDistribution> path;
  path.push_back(start);
  if (steps == 0) return path;

  std::vector<double> p0(start.probs().begin(), start.probs().end());
  Eigen::MatrixXd jac0 = chart_jacobian(p0, orders);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac0);
  const auto& sv = svd.singularValues();
  if (sv.minCoeff() <= 1e-12 * sv.maxCoeff()) {
    std::ostringstream oss;
    oss << "rank-deficient Jacobian at start; singular values:";
    for (Eigen::Index i = 0; i < sv.size(); ++i) oss << " " << sv(i);
    throw ComputationError(oss.str());
  }

  Eigen::VectorXd y = signature_vec(p0, orders);
  Eigen::VectorXd x(k - 1);
  for (int i = 0; i < k - 1; ++i) x(i) = p0[static_cast<std::size_t>(i) + 1];
  Eigen::VectorXd prev;
  for (int s = 0; s < steps; ++s) {
    std::vector<double> p = to_full(x);
    Eigen::MatrixXd null = null_space(chart_jacobian(p, orders));
    if (null.cols() == 0) {
      throw ComputationError("level set lost rank along the trace at step " + std::to_string(s));
    }
    Eigen::VectorXd v = null.col(0);
    if (prev.size() > 0 && v.dot(prev) < 0) v = -v;
    double h = step_size;
    bool moved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::VectorXd cand = x + h * v;
      if (correct(cand, orders, y, opts.corrector_tol)) {
        // consecutive-point spacing stays within step_size
        std::vector<double> pc = to_full(cand);
        double dist = 0.0;
        for (std::size_t i = 0; i < pc.size(); ++i) dist = std::max(dist, std::abs(pc[i] - p[i]));
        if (dist <= step_size * (1.0 + 1e-9)) {
          x = cand;
          prev = v;
          moved = true;
          break;
        }
      }
      h *= 0.5;
    }
    if (!moved) {
      throw ComputationError("trace left the sorted simplex at step " + std::to_string(s));
    }
    path.emplace_back(to_full(x));
  }
  return path;
}

}  // namespace gse

#include "gse/jacobian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace gse {

namespace {

double det2(const Eigen::MatrixXd& a) { return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0); }

double det3(const Eigen::MatrixXd& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

// Closed-form expansion up to 4x4, scaled LU above. Row maxima are factored
// first so the pivoting sees entries of comparable size.
double stable_det(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  switch (n) {
    case 0: return 1.0;
    case 1: return a(0, 0);
    case 2: return det2(a);
    case 3: return det3(a);
    case 4: {
      double d = 0.0;
      Eigen::MatrixXd sub(3, 3);
      for (Eigen::Index c = 0; c < 4; ++c) {
        Eigen::Index sc = 0;
        for (Eigen::Index cc = 0; cc < 4; ++cc) {
          if (cc == c) continue;
          sub.col(sc++) = a.block(1, cc, 3, 1);
        }
        double cof = a(0, c) * det3(sub);
        d += (c % 2 == 0) ? cof : -cof;
      }
      return d;
    }
    default: {
      Eigen::MatrixXd b = a;
      double scale = 1.0;
      for (Eigen::Index r = 0; r < n; ++r) {
        double mx = b.row(r).cwiseAbs().maxCoeff();
        if (mx == 0.0) return 0.0;
        b.row(r) /= mx;
        scale *= mx;
      }
      return scale * Eigen::PartialPivLU<Eigen::MatrixXd>(b).determinant();
    }
  }
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& a, std::span<const int> rows,
                       std::span<const int> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
    }
  }
  return out;
}

// Reorienting descending-u columns into ascending order reverses them:
// sign (-1)^(k(k-1)/2).
double orientation_sign(std::size_t k) { return (k / 2) % 2 == 0 ? 1.0 : -1.0; }

MinorSign classify(double value, double tol) {
  if (value > tol) return MinorSign::Positive;
  if (value < -tol) return MinorSign::Negative;
  return MinorSign::Indeterminate;
}

// Enumerates k-subsets of {0..n-1} in lexicographic order.
bool next_subset(std::vector<int>& idx, int n) {
  int k = static_cast<int>(idx.size());
  for (int i = k - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - k + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      }
      return true;
    }
  }
  return false;
}

}  // namespace

double MinorTolerance::threshold(double max_entry, int k) const {
  return abs + rel * std::pow(max_entry, k);
}

JacobianMatrix jacobian(const SortedDistribution& p, const OrderSet& orders) {
  if (p.has_multiplicity()) {
    throw ValidationError("chart Jacobian undefined at a multiplicity stratum");
  }
  const int k = p.size();
  const int r = orders.size();
  Eigen::MatrixXd entries(r, k - 1);
  const double log_p1 = std::log(p[0]);
  for (int j = 0; j < r; ++j) {
    const double m = orders[j];
    ScalarProfile sp = scalar_profile(p, m);
    const double pref = m * m * std::exp((m - 1.0) * log_p1 - sp.log_power_sum);
    for (int c = 1; c < k; ++c) {
      double u = std::log(p[c]) - log_p1;
      entries(j, c - 1) = pref * phi(m, u, sp.alpha);
    }
  }
  std::vector<int> cats(static_cast<std::size_t>(k - 1));
  for (int c = 0; c < k - 1; ++c) cats[static_cast<std::size_t>(c)] = c + 2;
  return JacobianMatrix{std::move(entries), orders, std::move(cats), p};
}

double oriented_minor(const JacobianMatrix& j, std::span<const int> rows,
                      std::span<const int> cols) {
  if (rows.size() != cols.size()) throw ValidationError("minor must be square");
  std::vector<int> rr(rows.begin(), rows.end());
  std::vector<int> cc(cols.begin(), cols.end());
  std::sort(rr.begin(), rr.end());
  std::sort(cc.begin(), cc.end());
  return orientation_sign(cc.size()) * stable_det(gather(j.entries, rr, cc));
}

namespace {

// Shared minor enumeration used by principal_minors and the sweep. Works on
// the canonical matrix (columns reversed so u ascends with position); the
// principal family is then the one the Fiedler-Ptak check probes. Expects a
// fresh report; fills the principal, all-square and leading tallies.
void enumerate_minors(const JacobianMatrix& jac, const MinorTolerance& tol, MinorReport& rep,
                      long long sample_index) {
  const Eigen::MatrixXd canon = jac.entries.rowwise().reverse();
  const int n = static_cast<int>(canon.cols());
  const int r = static_cast<int>(canon.rows());
  const double max_entry = canon.cwiseAbs().maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  rep.min_minor = inf;
  rep.square_min_minor = inf;
  rep.min_leading_minor = inf;

  const int kmax = std::min(n, r);
  for (int k = 1; k <= kmax; ++k) {
    const double thr = tol.threshold(max_entry, k);

    std::vector<int> rset(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) rset[static_cast<std::size_t>(i)] = i;
    do {
      std::vector<int> cset(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) cset[static_cast<std::size_t>(i)] = i;
      do {
        double v = stable_det(gather(canon, rset, cset));
        MinorSign verdict = classify(v, thr);
        ++rep.square_minors_checked;
        if (verdict == MinorSign::Negative) ++rep.square_negative_count;
        if (verdict == MinorSign::Indeterminate) ++rep.square_indeterminate_count;
        rep.square_min_minor = std::min(rep.square_min_minor, v);

        if (rset == cset) {  // principal
          ++rep.minors_checked;
          if (verdict == MinorSign::Negative) ++rep.negative_count;
          if (verdict == MinorSign::Indeterminate) ++rep.indeterminate_count;
          if (v < rep.min_minor) {
            rep.min_minor = v;
            rep.argmin_rows = rset;
            rep.argmin_cols.clear();
            for (int c : cset) {
              // canonical position c is natural column n-1-c
              rep.argmin_cols.push_back(
                  jac.col_categories[static_cast<std::size_t>(n - 1 - c)]);
            }
            std::sort(rep.argmin_cols.begin(), rep.argmin_cols.end());
            rep.tolerance = thr;
            rep.argmin_sample = sample_index;
          }
        }
        // Leading family: natural categories 2..k+1 = trailing canonical
        // positions. The evaluation-determinant structure covers exactly
        // these columns (any row set).
        if (cset.front() == n - k) {
          rep.min_leading_minor = std::min(rep.min_leading_minor, v);
          if (verdict == MinorSign::Negative) ++rep.leading_negative_count;
        }
      } while (next_subset(cset, n));
    } while (next_subset(rset, r));
  }
}

}  // namespace

MinorReport principal_minors(const JacobianMatrix& jac, const MinorTolerance& tol) {
  const int r = static_cast<int>(jac.entries.rows());
  const int n = static_cast<int>(jac.entries.cols());
  if (r != n) throw ValidationError("principal minors need a square Jacobian (|M| = K-1)");
  if (n > 14) throw ValidationError("principal-minor enumeration guarded at K-1 <= 14");
  MinorReport rep;
  rep.dimension = n;
  enumerate_minors(jac, tol, rep, 0);
  rep.all_positive = rep.negative_count == 0 && rep.indeterminate_count == 0;
  return rep;
}

double exp_kernel_det(std::span<const double> xs, std::span<const double> us) {
  if (xs.size() != us.size()) throw ValidationError("exp_kernel_det needs equal lengths");
  const int n = static_cast<int>(xs.size());
  if (n == 0) throw ValidationError("exp_kernel_det needs at least one node");
  for (int i = 1; i < n; ++i) {
    if (!(xs[static_cast<std::size_t>(i)] > xs[static_cast<std::size_t>(i - 1)]) ||
        !(us[static_cast<std::size_t>(i)] > us[static_cast<std::size_t>(i - 1)])) {
      throw ValidationError("exp_kernel_det arguments must be strictly increasing");
    }
  }
  Eigen::MatrixXd expo(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) expo(i, j) = xs[static_cast<std::size_t>(i)] * us[static_cast<std::size_t>(j)];
  }
  // Factor row then column maxima out of the exponents; the residual matrix
  // has entries in (0, 1] and a well-conditioned sign.
  double log_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = expo.row(i).maxCoeff();
    expo.row(i).array() -= mx;
    log_scale += mx;
  }
  for (int j = 0; j < n; ++j) {
    double mx = expo.col(j).maxCoeff();
    expo.col(j).array() -= mx;
    log_scale += mx;
  }
  Eigen::MatrixXd resid = expo.array().exp().matrix();
  return std::exp(log_scale) * stable_det(resid);
}

EctDeterminant ect_eval_det(const SortedDistribution& p, const OrderSet& orders_sub,
                            std::span<const int> cols, const MinorTolerance& tol) {
  const int k = orders_sub.size();
  if (static_cast<int>(cols.size()) != k) {
    throw ValidationError("ect_eval_det needs as many columns as orders");
  }
  std::vector<int> sorted_cols(cols.begin(), cols.end());
  std::sort(sorted_cols.begin(), sorted_cols.end());
  for (int i = 0; i < k; ++i) {
    int c = sorted_cols[static_cast<std::size_t>(i)];
    if (c < 2 || c > p.size()) throw ValidationError("column category out of range 2..K");
    if (i > 0 && c == sorted_cols[static_cast<std::size_t>(i - 1)]) {
      throw ValidationError("duplicate column categories");
    }
  }
  const double log_p1 = std::log(p[0]);
  Eigen::MatrixXd a(k, k);  // natural order: categories ascending, u descending
  for (int row = 0; row < k; ++row) {
    const double m = orders_sub[row];
    ScalarProfile sp = scalar_profile(p, m);
    for (int col = 0; col < k; ++col) {
      double u = std::log(p[sorted_cols[static_cast<std::size_t>(col)] - 1]) - log_p1;
      a(row, col) = phi(m, u, sp.alpha);
    }
  }
  EctDeterminant out;
  out.raw_value = stable_det(a);
  out.value = orientation_sign(static_cast<std::size_t>(k)) * out.raw_value;
  out.tolerance = tol.threshold(a.cwiseAbs().maxCoeff(), k);
  out.sign = classify(out.value, out.tolerance);
  return out;
}

bool fiedler_ptak_check(const Eigen::MatrixXd& a, int trials, std::uint64_t seed,
                        Eigen::VectorXd* violation) {
  if (a.rows() != a.cols()) throw ValidationError("Fiedler-Ptak check needs a square matrix");
  const int n = static_cast<int>(a.rows());
  auto passes = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd aw = a * w;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::max(best, w(i) * aw(i));
    return best > 0.0;
  };
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w(i) = 1.0;
    if (!passes(w)) {
      if (violation) *violation = w;
      return false;
    }
  }
  RandomStream stream(seed);
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd w(n);
    double norm = 0.0;
    do {
      for (int i = 0; i < n; ++i) w(i) = stream.uniform(-1.0, 1.0);
      norm = w.norm();
    } while (norm == 0.0);
    if (!passes(w)) {
      if (violation) *violation = w;
      return false;
    }
  }
  return true;
}

bool fiedler_ptak_check(const JacobianMatrix& jac, int trials, std::uint64_t seed,
                        Eigen::VectorXd* violation) {
  // Canonical orientation (columns reversed): the matrix whose principal
  // minors the MinorReport tallies.
  Eigen::MatrixXd b = jac.entries.rowwise().reverse();
  return fiedler_ptak_check(b, trials, seed, violation);
}

SortedDistribution sample_sorted_interior(int k, RandomStream& stream, double min_gap,
                                          int max_tries) {
  for (int t = 0; t < max_tries; ++t) {
    std::vector<double> v = stream.dirichlet1(k);
    std::sort(v.begin(), v.end(), std::greater<>());
    bool ok = true;
    for (int i = 1; i < k; ++i) {
      if (v[static_cast<std::size_t>(i - 1)] - v[static_cast<std::size_t>(i)] < min_gap) ok = false;
    }
    if (!ok) continue;
    double s = 0.0;
    for (double x : v) s += x;
    v.front() += 1.0 - s;
    return SortedDistribution(std::move(v));
  }
  throw ComputationError("interior sampling failed after bounded rejections");
}

OrderSet sample_orders(int count, double lo, double hi, double min_gap, RandomStream& stream,
                       int max_tries) {
  for (int t = 0; t < max_tries; ++t) {
    std::vector<double> ms(static_cast<std::size_t>(count));
    for (double& m : ms) m = stream.uniform(lo, hi);
    std::sort(ms.begin(), ms.end());
    bool ok = true;
    for (int i = 1; i < count; ++i) {
      if (ms[static_cast<std::size_t>(i)] - ms[static_cast<std::size_t>(i - 1)] < min_gap) ok = false;
    }
    if (!ok) continue;
    return OrderSet(std::move(ms));
  }
  throw ComputationError("order sampling failed after bounded rejections");
}

MinorReport sweep_pmatrix(int k, const OrderSet& orders, int samples, std::uint64_t seed,
                          int workers, const MinorTolerance& tol) {
  if (orders.size() != k - 1) throw ValidationError("sweep needs |M| = K-1");
  if (k - 1 > 14) throw ValidationError("principal-minor enumeration guarded at K-1 <= 14");
  if (samples < 1) throw ValidationError("samples must be positive");

  std::vector<MinorReport> per_point(static_cast<std::size_t>(samples));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= samples) return;
      RandomStream stream = RandomStream::derived(seed, static_cast<std::uint64_t>(i));
      SortedDistribution p = sample_sorted_interior(k, stream);
      JacobianMatrix jac = jacobian(p, orders);
      MinorReport rep;
      rep.dimension = k - 1;
      enumerate_minors(jac, tol, rep, i);
      per_point[static_cast<std::size_t>(i)] = std::move(rep);
    }
  };

  int n_workers = workers > 0 ? workers
                              : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n_workers = std::min(n_workers, samples);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Deterministic aggregation in point order.
  MinorReport agg;
  agg.dimension = k - 1;
  agg.samples = samples;
  agg.seed = seed;
  bool first = true;
  for (const auto& rep : per_point) {
    agg.minors_checked += rep.minors_checked;
    agg.negative_count += rep.negative_count;
    agg.indeterminate_count += rep.indeterminate_count;
    agg.square_minors_checked += rep.square_minors_checked;
    agg.square_negative_count += rep.square_negative_count;
    agg.square_indeterminate_count += rep.square_indeterminate_count;
    agg.leading_negative_count += rep.leading_negative_count;
    if (first || rep.min_minor < agg.min_minor) {
      agg.min_minor = rep.min_minor;
      agg.argmin_rows = rep.argmin_rows;
      agg.argmin_cols = rep.argmin_cols;
      agg.tolerance = rep.tolerance;
      agg.argmin_sample = rep.argmin_sample;
    }
    if (first || rep.square_min_minor < agg.square_min_minor) {
      agg.square_min_minor = rep.square_min_minor;
    }
    if (first || rep.min_leading_minor < agg.min_leading_minor) {
      agg.min_leading_minor = rep.min_leading_minor;
    }
    first = false;
  }
  agg.all_positive = agg.negative_count == 0 && agg.indeterminate_count == 0;
  return agg;
}

}  // namespace gse

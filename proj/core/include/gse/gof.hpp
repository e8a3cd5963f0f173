#pragma once

#include <cstdint>
#include <vector>

#include "gse/entropy.hpp"

namespace gse {

// Empirical count data over an unordered alphabet.
struct CountVector {
  std::vector<long long> counts;
  long long total = 0;

  explicit CountVector(std::vector<long long> c);
  int positive_categories() const;
};

enum class TestMethod { ParametricBootstrap, RecenteredBootstrap };

struct TestReport {
  double statistic = 0;
  double p_value = 1;
  int replicates = 0;
  std::uint64_t seed = 0;
  OrderSet orders;
  TestMethod method = TestMethod::ParametricBootstrap;
};

// Signature of the empirical distribution: zero categories dropped, the
// rest normalized.
GseSignature plugin_signature(const CountVector& c, const OrderSet& orders);

// Goodness-of-fit against a fully specified null q: statistic
// D = sum_m (H_hat^(m) - H^(m)(q))^2, null replicates from multinomial(N, q),
// add-one p-value.
TestReport gof_test(const CountVector& c, const Distribution& q, const OrderSet& orders, int b,
                    std::uint64_t seed);

// Two-sample signature test across possibly disparate alphabets: statistic
// D = ||s_a - s_b||_2; the null resamples each side from its own empirical
// distribution and recenters, D* = ||(s*_a - s_a) - (s*_b - s_b)||_2.
TestReport two_sample_test(const CountVector& a, const CountVector& b, const OrderSet& orders,
                           int b_replicates, std::uint64_t seed);

}  // namespace gse

#pragma once

#include <cstdint>
#include <vector>

#include "gse/entropy.hpp"

namespace gse {

// Two distinct sorted distributions with (numerically) identical signatures:
// a constructive non-injectivity witness for |M| <= K-2.
struct CollisionPair {
  SortedDistribution p;
  SortedDistribution q;
  double signature_gap = 0;  // ||T_M(p) - T_M(q)||_inf, re-verified forward
  double separation = 0;     // ||p - q||_inf
  double epsilon_used = 0;   // skew-ray ladder scale that worked
  double rho_used = 0;       // ladder decay that worked
};

struct WitnessOptions {
  double predictor_step = 1e-2;
  double corrector_tol = 1e-12;
  int max_steps = 4000;
  std::uint64_t seed = kDefaultSeed;  // reserved; the walk itself is deterministic
};

// Finds a collision pair by predictor-corrector continuation along the
// signature level set, starting from a skew-ray ladder point
// p(eps) = (1 - sum eps_k, eps_2, ..., eps_K), eps_k = eps * rho^(k-2).
// Throws ValidationError when |M| > K-2 (injective regime) and
// ComputationError when no ladder start reaches the requested separation.
CollisionPair find_collision(int k, const OrderSet& orders, double min_separation,
                             const WitnessOptions& opts = {});

// Discrete path on the level set through `start`: `steps` predictor-corrector
// moves of at most `step_size`. Throws on rank deficiency at the start.
std::vector<SortedDistribution> level_set_trace(int k, const OrderSet& orders,
                                                const SortedDistribution& start, int steps,
                                                double step_size,
                                                const WitnessOptions& opts = {});

}  // namespace gse

#pragma once

#include <stdexcept>
#include <string>

namespace gse {

// Default tolerance for detecting ties between adjacent sorted probabilities.
inline constexpr double kTieTol = 1e-12;

// Probability vectors must sum to one within this slack.
inline constexpr double kSumTol = 1e-12;

// Engineering cap on entropy orders: beyond this the escort distribution is
// numerically a point mass and signatures are flat.
inline constexpr double kMaxOrder = 64.0;

// Smallest probability an iterate is allowed to reach inside a solver.
inline constexpr double kBoundaryFloor = 1e-14;

// Default seed for every randomized routine, overridable per call site.
inline constexpr unsigned long long kDefaultSeed = 42;

// Invalid input: bad probabilities, bad orders, malformed files. Maps to
// CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// An analytic procedure ran out of road (continuation left the domain,
// sampling rejected too often). Maps to CLI exit code 1.
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gse

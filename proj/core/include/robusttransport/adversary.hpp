#pragma once

#include <cstdint>
#include <variant>

#include "robusttransport/measures.hpp"
#include "robusttransport/transport.hpp"

namespace rtr {

/// Record of a generated corruption: which sample indices were replaced
/// outright (TV budget) and the local displacement applied to each kept index
/// (average-norm budget rho).
struct CorruptionPlan {
  std::vector<int> tv_indices;
  Eigen::MatrixXd displacements;  // n x d, rows of replaced indices are zero
  double eps = 0;
  double rho = 0;

  double average_displacement() const;
};

// --- replacement (TV) strategies ---

struct ClusterStrategy {
  Eigen::VectorXd direction;  // unit vector
  double distance = 0;        // replaced points land at mean + distance*direction
};
struct HeavyTailStrategy {
  double scale = 1.0;  // Pareto-radius blow-up in a random direction
};
struct CustomPointsStrategy {
  Eigen::MatrixXd points;  // cycled through if fewer than floor(eps*n)
};
using TvStrategy = std::variant<ClusterStrategy, HeavyTailStrategy, CustomPointsStrategy>;

// --- local (W1) strategies ---

struct UniformShiftStrategy {
  Eigen::VectorXd direction;  // every point moves rho*direction
};
struct ConcentratedStrategy {
  double fraction = 0.1;      // this fraction moves (rho/fraction)*direction
  Eigen::VectorXd direction;
};
using W1Strategy = std::variant<UniformShiftStrategy, ConcentratedStrategy>;

// Replace exactly floor(eps*n) points according to the strategy. The sample
// count stays fixed; the certified budget is ||corrupted - clean||_TV <= eps.
std::pair<DiscreteMeasure, CorruptionPlan> tv_corrupt(const DiscreteMeasure& clean,
                                                      double eps,
                                                      const TvStrategy& strategy,
                                                      std::uint64_t seed);

// Local perturbation with (1/n) sum ||Delta_i|| <= rho, so W1 between clean
// and corrupted is at most rho via the identity coupling.
std::pair<DiscreteMeasure, CorruptionPlan> w1_corrupt(const DiscreteMeasure& clean,
                                                      double rho,
                                                      const W1Strategy& strategy,
                                                      std::uint64_t seed);

// Local shifts applied first, then TV replacement; replaced points carry no
// displacement budget.
std::pair<DiscreteMeasure, CorruptionPlan> combined_corrupt(
    const DiscreteMeasure& clean, double eps, double rho,
    const TvStrategy& tv_strategy, const W1Strategy& w1_strategy,
    std::uint64_t seed);

// Given a coupling between P and Q with mean cost rho, build R by keeping the
// displacements whose norm is below the (1-tau)-quantile and snapping the rest
// back to their source. The boundary atom is split fractionally so kept mass
// is exactly 1 - tau. Then W1(P,R) <= rho, W2(P,R) <= sqrt(2)*rho/sqrt(tau),
// and ||R - Q||_TV <= tau.
DiscreteMeasure w1_decompose(const DiscreteMeasure& p, const DiscreteMeasure& q,
                             const Coupling& coupling, double tau);

}  // namespace rtr

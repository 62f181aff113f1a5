#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "robusttransport/measures.hpp"

namespace rtr {

struct StabilityParams {
  double eps = 0;
  double delta = 0;                   // delta >= eps
  std::optional<double> lambda;       // W2 proximity radius, when relevant
};

struct StabilitySearchConfig {
  int directions = 64;
  int ascent_steps = 100;
  double step0 = 0.1;
  std::uint64_t seed = 0;
  bool exhaustive = false;  // exact subset enumeration, gated at n <= 12
};

struct StabilityWitness {
  std::string kind;            // "mean" or "covariance"
  Eigen::VectorXd direction;
  Eigen::VectorXd keep_weights;
  double violation = 0;        // measured shift minus allowed bound
};

// Exact worst-case mean shift under eps-deletions of a 1-D measure. The
// supremum is attained by deleting eps mass from one tail (boundary atom
// split fractionally); both tails are tried.
double mean_resilience_1d(const DiscreteMeasure& p, double eps);

// Lower-bound certificate in dimension d: max over searched directions of the
// 1-D tail-deletion value of the projection. Exact when d = 1.
double mean_resilience(const DiscreteMeasure& p, double eps,
                       const StabilitySearchConfig& cfg = {});

// tau_p: worst-case pth moment about mu_P under eps-deletions,
// sup_{Q <= P/(1-eps)} E_Q ||z - mu_P||^p. Exact: the supremum deletes eps
// mass from the small-radius tail. This form makes the chain
// tau <= tau_1 <= sqrt(tau_2) hold for every measure.
double pth_order_resilience(const DiscreteMeasure& p, double eps, int order);

// Search for a deletion violating the stability bounds ||mu_Q - mu_P|| <= delta
// or |v^T(Sigma_Q - Sigma_P)v| <= delta^2/eps. Heuristic mode can falsify but
// not certify; exhaustive mode is exact over extreme-point deletions (n <= 12).
std::optional<StabilityWitness> stability_violation(const DiscreteMeasure& p,
                                                    const StabilityParams& params,
                                                    const StabilitySearchConfig& cfg);

// Error-certificate bound: 21*eps^(1/q-1)*delta_tilde*sqrt(k)/(1-eps)
//                        + 36*eps^(1/q-1/2)*eta_tilde/(1-eps)^(3/2).
double certificate_bound(double delta_tilde, double eta_tilde, double eps, int q,
                         int k);

}  // namespace rtr

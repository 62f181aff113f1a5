#pragma once

#include <cstdint>
#include <utility>

#include "robusttransport/filter.hpp"
#include "robusttransport/measures.hpp"

namespace rtr {

enum class LossTag { linear, absolute_regression, hinge };

// Lipschitz loss with low-dimensional linear structure: x -> lbar(A x + b).
// lbar on R^k is one of
//   linear:              theta . z                       (theta in R^k)
//   absolute_regression: |theta . z_{1..k-1} - z_k|      (theta in R^(k-1))
//   hinge:               max(0, 1 - theta . z)           (theta in R^k)
struct LossSpec {
  Eigen::MatrixXd affine_map;  // k x d
  Eigen::VectorXd offset;      // k
  LossTag tag = LossTag::linear;
  Eigen::VectorXd theta;
  int growth_order = 1;  // p; 2 only plumbed through, the pipeline uses 1

  Eigen::Index out_dim() const { return affine_map.rows(); }
  // gradient of lbar w.r.t. z up to sign flips; Lip = ||A^T u||
  Eigen::VectorXd lip_vector() const;
  double lip_const() const;
  double inner(const Eigen::VectorXd& z) const;
  double eval(const Eigen::VectorXd& x) const;
};

double empirical_risk(const DiscreteMeasure& p_hat, const LossSpec& loss);

// sup over the W1 ball of radius tau; exact for this family:
// E_{P_hat}[loss] + tau * lip_const.
double dro_value_w1(const DiscreteMeasure& p_hat, const LossSpec& loss, double tau);

// Evaluates the inner sup twice: directly in R^d and on the k'-dim orthogonal
// pushforward obtained from the QR factorization A = B U (U orthonormal rows,
// k' = rank A). Returns {lhs, rhs} for equality assertion by the caller.
std::pair<double, double> pushforward_equivalence_check(const DiscreteMeasure& p_hat,
                                                        const LossSpec& loss,
                                                        double tau);

struct FitConfig {
  int max_iters = 5000;
  double tol = 1e-6;     // objective improvement tolerance
  double step0 = 0.5;
  std::uint64_t seed = 0;
};

struct FitResult {
  LossSpec loss;         // family with fitted theta
  double objective = 0;  // E_{filtered}[loss] + tau * Lip at the fit
  bool converged = false;
  int iterations = 0;
  FilterReport filter_report;
  DiscreteMeasure filtered;
};

// Corollary-8 pipeline: filter the corrupted sample (practical preset), then
// minimize E[loss_theta] + tau * Lip(theta) by subgradient descent. `family`
// carries the affine map, tag and the starting theta.
FitResult or_wdro_fit(const DiscreteMeasure& corrupted, double eps, double rho,
                      const LossSpec& family, double tau, const FitConfig& cfg = {});

// E_eval[fitted] - E_eval[oracle_best].
double excess_risk(const LossSpec& fitted, const LossSpec& oracle_best,
                   const DiscreteMeasure& eval);

}  // namespace rtr

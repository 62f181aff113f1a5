#pragma once

#include <cstdint>
#include <string>

#include "robusttransport/measures.hpp"

namespace rtr {

struct FilterConfig {
  double sigma = 50.0;   // theory default; makes termination immediate at desk scale
  double big_c = 1e10;
  double eps = 0;
  double rho = 0;
  int p = 1;             // p = 2 switches the termination threshold variant
  int max_iters = 1000;
  std::uint64_t seed = 0;

  // sigma = 2, C = 20: the preset used by all experiments
  static FilterConfig practical(double eps, double rho, std::uint64_t seed,
                                int p = 1) {
    FilterConfig c;
    c.sigma = 2.0;
    c.big_c = 20.0;
    c.eps = eps;
    c.rho = rho;
    c.seed = seed;
    c.p = p;
    return c;
  }

  double threshold() const;  // C*eps + C*rho^2*eps^(1-2/p)
};

struct FilterIteration {
  double trace_objective = 0;  // tr(Pi (Sigma_T - sigma^2 I))
  int projector_rank = 0;
  std::vector<int> removed_indices;  // original sample indices
  std::vector<double> g_values;      // per current-T point, T order
  std::vector<double> f_values;
  std::vector<int> L_indices;        // original sample indices
};

struct FilterReport {
  std::vector<FilterIteration> iterations;
  int final_size = 0;
  bool terminated_by_threshold = false;
  std::string diagnostic;            // set on degenerate / breakdown exits
  std::vector<int> kept_indices;     // original sample indices surviving
};

// Multi-directional filtering against the trace objective
// tr(Sigma_T - sigma^2 I)_+. Input must be a uniform measure; the output is
// uniform on a surviving subset of its points. Deterministic given cfg.seed.
// eps = 0 returns the input unchanged.
std::pair<DiscreteMeasure, FilterReport> filter_w2(const DiscreteMeasure& corrupted,
                                                   const FilterConfig& cfg);

// Single-direction variant: projector replaced by the top eigenvector,
// termination when lambda_max(Sigma_T) < bound.
DiscreteMeasure filter_standard(const DiscreteMeasure& corrupted, double eps,
                                double bound, std::uint64_t seed,
                                FilterReport* report = nullptr);

// Mean of the filtered measure.
Eigen::VectorXd robust_mean(const DiscreteMeasure& corrupted, const FilterConfig& cfg);

}  // namespace rtr

#pragma once

#include <cstdint>
#include <optional>

#include "robusttransport/measures.hpp"

namespace rtr {

/// Explicit transport plan between two discrete measures, stored as a sparse
/// edge list. cost_p is the total transported cost at order p (not the p-th
/// root).
struct Coupling {
  std::vector<int> source_idx;
  std::vector<int> target_idx;
  std::vector<double> mass;
  double cost_p = 0;
  int p = 1;

  size_t edges() const { return mass.size(); }
};

// Exact 1-D W1 via the quantile coupling. Optionally records the monotone
// coupling pairs.
double w1_1d(const DiscreteMeasure& a, const DiscreteMeasure& b,
             Coupling* coupling = nullptr);

struct ExactResult {
  double value;  // W_p, i.e. p-th root of the optimal cost
  Coupling coupling;
};

// Exact discrete OT by min-cost flow (successive shortest paths with
// potentials). Guarded at n_a*n_b <= 10^6.
ExactResult wp_exact(const DiscreteMeasure& a, const DiscreteMeasure& b, int p);

// eps-outlier-robust W_p: smallest W_p(mu',b) over mu' within TV distance eps
// of a. Solved as one min-cost flow with a free slack source/sink of mass eps.
double robust_wp(const DiscreteMeasure& a, const DiscreteMeasure& b, double eps,
                 int p);

struct SlicedConfig {
  int restarts = 16;
  int steps = 300;
  double step0 = 0.1;
  std::uint64_t seed = 0;
  // For k > 1 the exact low-dimensional OT is re-solved every ot_every steps;
  // intermediate steps reuse the last coupling as a subgradient model.
  int ot_every = 10;
  // Optional warm start; callers sweeping k ascending pass the previous best
  // frame (extended by a random orthonormal complement row) to make the
  // estimate monotone in k on the same seed schedule.
  std::optional<Eigen::MatrixXd> init_frame;
};

struct SlicedResult {
  double value = 0;  // certified lower bound on W_{1,k}: exact W1 of the
                     // pushforwards under `frame`
  Eigen::MatrixXd frame;
  int restarts_used = 0;
};

// Lower-bound estimator for the k-dimensional max-sliced W1. Any feasible
// frame certifies a lower bound; the search is projected subgradient ascent on
// the sphere (k=1) or Stiefel manifold (k>1) with QR retraction.
SlicedResult max_sliced_w1(const DiscreteMeasure& a, const DiscreteMeasure& b,
                           int k, const SlicedConfig& cfg);

// Total variation distance between discrete measures, matching atoms exactly.
double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

}  // namespace rtr

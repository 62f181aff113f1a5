#include "robusttransport/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "robusttransport/rng.hpp"
#include "robusttransport/spectral.hpp"

namespace rtr {

namespace {

void check_eps(double eps) {
  if (eps <= 0 || eps >= 1) throw std::invalid_argument("eps must be in (0,1)");
}

// Keep weights after deleting exactly eps mass from one tail of the values
// (ascending if from_bottom), splitting the boundary atom.
Eigen::VectorXd tail_keep_weights(const Eigen::VectorXd& values,
                                  const Eigen::VectorXd& weights, double eps,
                                  bool from_bottom) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return from_bottom ? values[a] < values[b] : values[a] > values[b];
  });
  Eigen::VectorXd keep = weights;
  double budget = eps;
  for (Eigen::Index r = 0; r < n && budget > 0; ++r) {
    double take = std::min(budget, keep[order[r]]);
    keep[order[r]] -= take;
    budget -= take;
  }
  return keep;
}

// Mean shift vector mu_Q - mu_P for the eps tail deletion of the projections
// onto v (long double accumulation).
Eigen::VectorXd tail_shift(const DiscreteMeasure& p, const Eigen::VectorXd& proj,
                           double eps, bool from_bottom) {
  Eigen::VectorXd keep = tail_keep_weights(proj, p.weights(), eps, from_bottom);
  const Eigen::Index d = p.dim();
  std::vector<long double> num(d, 0.0L), tot(d, 0.0L);
  long double kept_mass = 0.0L;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    kept_mass += keep[i];
    for (Eigen::Index j = 0; j < d; ++j) {
      num[j] += static_cast<long double>(keep[i]) * p.points()(i, j);
      tot[j] += static_cast<long double>(p.weights()[i]) * p.points()(i, j);
    }
  }
  Eigen::VectorXd shift(d);
  for (Eigen::Index j = 0; j < d; ++j)
    shift[j] = static_cast<double>(num[j] / kept_mass - tot[j]);
  return shift;
}

}  // namespace

double mean_resilience_1d(const DiscreteMeasure& p, double eps) {
  check_eps(eps);
  if (p.dim() != 1) throw std::invalid_argument("mean_resilience_1d requires dim 1");
  Eigen::VectorXd vals = p.points().col(0);
  double lo = std::abs(tail_shift(p, vals, eps, true)[0]);
  double hi = std::abs(tail_shift(p, vals, eps, false)[0]);
  return std::max(lo, hi);
}

double mean_resilience(const DiscreteMeasure& p, double eps,
                       const StabilitySearchConfig& cfg) {
  check_eps(eps);
  if (p.dim() == 1) return mean_resilience_1d(p, eps);
  const Eigen::Index d = p.dim();
  auto rng = make_rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double best = 0;
  for (int r = 0; r < cfg.directions; ++r) {
    Eigen::VectorXd v(d);
    if (r < d) {
      v.setZero();
      v[r] = 1.0;
    } else {
      for (Eigen::Index j = 0; j < d; ++j) v[j] = gauss(rng);
      v.normalize();
    }
    for (int t = 0; t < cfg.ascent_steps; ++t) {
      Eigen::VectorXd proj = p.points() * v;
      Eigen::VectorXd s_lo = tail_shift(p, proj, eps, true);
      Eigen::VectorXd s_hi = tail_shift(p, proj, eps, false);
      // deleting the bottom tail pushes the mean up along v and vice versa
      Eigen::VectorXd shift = s_lo.norm() >= s_hi.norm() ? s_lo : s_hi;
      best = std::max(best, shift.norm());
      if (shift.norm() < 1e-15) break;
      // envelope subgradient: the shift itself
      v = (v + cfg.step0 / std::sqrt(t + 1.0) * shift.normalized()).normalized();
    }
  }
  return best;
}

double pth_order_resilience(const DiscreteMeasure& p, double eps, int order) {
  check_eps(eps);
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
  Eigen::VectorXd mu = p.points().transpose() * p.weights();
  Eigen::VectorXd scalars(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    double r = (p.points().row(i).transpose() - mu).norm();
    scalars[i] = order == 1 ? r : r * r;
  }
  // E_Q r^p is maximized by deleting eps mass of the smallest radii
  Eigen::VectorXd keep = tail_keep_weights(scalars, p.weights(), eps, true);
  long double num = 0.0L, mass = 0.0L;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    num += static_cast<long double>(keep[i]) * scalars[i];
    mass += keep[i];
  }
  return static_cast<double>(num / mass);
}

namespace {

std::optional<StabilityWitness> check_deletion(const DiscreteMeasure& p,
                                               const Eigen::VectorXd& keep,
                                               const StabilityParams& params,
                                               const Eigen::VectorXd& mu_p,
                                               const Eigen::MatrixXd& sigma_p) {
  double kept = keep.sum();
  if (!(kept > 0)) return std::nullopt;
  Eigen::VectorXd mu_q = p.points().transpose() * keep / kept;
  Eigen::MatrixXd centered = p.points().rowwise() - mu_q.transpose();
  Eigen::MatrixXd sigma_q =
      centered.transpose() * (keep / kept).asDiagonal() * centered;

  double mean_shift = (mu_q - mu_p).norm();
  if (mean_shift > params.delta + 1e-12) {
    StabilityWitness w;
    w.kind = "mean";
    w.direction = (mu_q - mu_p).normalized();
    w.keep_weights = keep;
    w.violation = mean_shift - params.delta;
    return w;
  }
  double cov_bound = params.delta * params.delta / params.eps;
  SpectralDecomposition e = sym_eig(0.5 * (sigma_q - sigma_p + (sigma_q - sigma_p).transpose()));
  Eigen::Index arg = 0;
  double worst = 0;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
    if (std::abs(e.eigenvalues[i]) > worst) {
      worst = std::abs(e.eigenvalues[i]);
      arg = i;
    }
  if (worst > cov_bound + 1e-12) {
    StabilityWitness w;
    w.kind = "covariance";
    w.direction = e.eigenvectors.col(arg);
    w.keep_weights = keep;
    w.violation = worst - cov_bound;
    return w;
  }
  return std::nullopt;
}

}  // namespace

std::optional<StabilityWitness> stability_violation(const DiscreteMeasure& p,
                                                    const StabilityParams& params,
                                                    const StabilitySearchConfig& cfg) {
  check_eps(params.eps);
  if (params.delta < params.eps)
    throw std::invalid_argument("stability requires delta >= eps");
  const double eps = params.eps;
  MomentSummary mom = moments(p);

  if (cfg.exhaustive) {
    if (p.size() > 12)
      throw std::invalid_argument("exhaustive mode gated at n <= 12");
    const int n = static_cast<int>(p.size());
    // extreme points of the deletion polytope: a fully-deleted subset plus at
    // most one fractional atom exhausting the eps budget
    for (int mask = 0; mask < (1 << n); ++mask) {
      double deleted = 0;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) deleted += p.weights()[i];
      if (deleted > eps + 1e-12) continue;
      Eigen::VectorXd base = p.weights();
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) base[i] = 0;
      double leftover = eps - deleted;
      if (leftover <= 1e-15) {
        if (auto w = check_deletion(p, base, params, mom.mean, mom.covariance))
          return w;
      } else {
        for (int j = 0; j < n; ++j) {
          if (mask & (1 << j)) continue;
          if (p.weights()[j] < leftover) continue;
          Eigen::VectorXd keep = base;
          keep[j] -= leftover;
          if (auto w = check_deletion(p, keep, params, mom.mean, mom.covariance))
            return w;
        }
      }
    }
    return std::nullopt;
  }

  // heuristic directional search (falsification only)
  auto rng = make_rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index d = p.dim();
  for (int r = 0; r < cfg.directions; ++r) {
    Eigen::VectorXd v(d);
    if (r < d) {
      v.setZero();
      v[r] = 1.0;
    } else {
      for (Eigen::Index j = 0; j < d; ++j) v[j] = gauss(rng);
      v.normalize();
    }
    for (int t = 0; t < cfg.ascent_steps; ++t) {
      Eigen::VectorXd proj = p.points() * v;
      for (bool from_bottom : {true, false}) {
        Eigen::VectorXd keep = tail_keep_weights(proj, p.weights(), eps, from_bottom);
        if (auto w = check_deletion(p, keep, params, mom.mean, mom.covariance))
          return w;
        // second-moment tails along v
        Eigen::VectorXd sq = (proj.array() - proj.dot(p.weights())).square();
        Eigen::VectorXd keep2 = tail_keep_weights(sq, p.weights(), eps, from_bottom);
        if (auto w = check_deletion(p, keep2, params, mom.mean, mom.covariance))
          return w;
      }
      Eigen::VectorXd shift = tail_shift(p, proj, eps, true);
      Eigen::VectorXd shift_hi = tail_shift(p, proj, eps, false);
      if (shift_hi.norm() > shift.norm()) shift = shift_hi;
      if (shift.norm() < 1e-15) break;
      v = (v + cfg.step0 / std::sqrt(t + 1.0) * shift.normalized()).normalized();
    }
  }
  return std::nullopt;
}

double certificate_bound(double delta_tilde, double eta_tilde, double eps, int q,
                         int k) {
  check_eps(eps);
  if (q != 1 && q != 2) throw std::invalid_argument("q must be 1 or 2");
  double qi = 1.0 / q;
  return 21.0 * std::pow(eps, qi - 1.0) * delta_tilde * std::sqrt(static_cast<double>(k)) /
             (1.0 - eps) +
         36.0 * std::pow(eps, qi - 0.5) * eta_tilde / std::pow(1.0 - eps, 1.5);
}

}  // namespace rtr

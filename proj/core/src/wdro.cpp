#include "robusttransport/wdro.hpp"

#include <cmath>
#include <stdexcept>

namespace rtr {

namespace {

void check_theta(const LossSpec& loss) {
  Eigen::Index want = loss.tag == LossTag::absolute_regression ? loss.out_dim() - 1
                                                               : loss.out_dim();
  if (loss.theta.size() != want)
    throw std::invalid_argument("theta size does not match loss family");
  if (loss.tag == LossTag::absolute_regression && loss.out_dim() < 2)
    throw std::invalid_argument("absolute_regression needs out_dim >= 2");
  if (loss.growth_order != 1 && loss.growth_order != 2)
    throw std::invalid_argument("growth_order must be 1 or 2");
}

}  // namespace

Eigen::VectorXd LossSpec::lip_vector() const {
  check_theta(*this);
  if (tag == LossTag::absolute_regression) {
    Eigen::VectorXd u(out_dim());
    u.head(out_dim() - 1) = theta;
    u[out_dim() - 1] = -1.0;
    return u;
  }
  return theta;  // linear and hinge are 1-Lipschitz in theta.z
}

double LossSpec::lip_const() const {
  return (affine_map.transpose() * lip_vector()).norm();
}

double LossSpec::inner(const Eigen::VectorXd& z) const {
  switch (tag) {
    case LossTag::linear:
      return theta.dot(z);
    case LossTag::absolute_regression:
      return std::abs(theta.dot(z.head(z.size() - 1)) - z[z.size() - 1]);
    case LossTag::hinge:
      return std::max(0.0, 1.0 - theta.dot(z));
  }
  throw std::logic_error("unknown loss tag");
}

double LossSpec::eval(const Eigen::VectorXd& x) const {
  return inner(affine_map * x + offset);
}

double empirical_risk(const DiscreteMeasure& p_hat, const LossSpec& loss) {
  check_theta(loss);
  if (p_hat.dim() != loss.affine_map.cols())
    throw std::invalid_argument("loss/measure dimension mismatch");
  double s = 0;
  for (Eigen::Index i = 0; i < p_hat.size(); ++i)
    s += p_hat.weights()[i] * loss.eval(p_hat.points().row(i).transpose());
  return s;
}

double dro_value_w1(const DiscreteMeasure& p_hat, const LossSpec& loss, double tau) {
  if (tau < 0) throw std::invalid_argument("tau must be nonnegative");
  return empirical_risk(p_hat, loss) + tau * loss.lip_const();
}

std::pair<double, double> pushforward_equivalence_check(const DiscreteMeasure& p_hat,
                                                        const LossSpec& loss,
                                                        double tau) {
  check_theta(loss);
  double lhs = dro_value_w1(p_hat, loss, tau);

  // A = B U via the QR factorization of A^T; drop near-null directions so a
  // rank-deficient map reduces to fewer pushforward coordinates
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(loss.affine_map.transpose());
  Eigen::MatrixXd q = qr.householderQ() *
                      Eigen::MatrixXd::Identity(loss.affine_map.cols(), loss.out_dim());
  Eigen::MatrixXd r = qr.matrixQR()
                          .topRows(loss.out_dim())
                          .triangularView<Eigen::Upper>();
  double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < loss.out_dim(); ++i)
    if (std::abs(r(i, i)) > 1e-12 * scale) ++rank;
  // column-pivot-free QR keeps nonzero pivots in the leading block for the
  // generic full-rank-prefix inputs used here
  Eigen::MatrixXd u_rows = q.leftCols(rank).transpose();          // rank x d
  Eigen::MatrixXd b = r.topRows(rank).transpose();                // k x rank

  DiscreteMeasure pushed = pushforward(p_hat, ProjectionFrame(u_rows));
  LossSpec reduced = loss;
  reduced.affine_map = b;
  double rhs = dro_value_w1(pushed, reduced, tau);
  return {lhs, rhs};
}

namespace {

// subgradient of E_{P}[lbar_theta(z_i)] + tau * ||A^T u(theta)|| w.r.t. theta
Eigen::VectorXd subgradient(const LossSpec& loss, const Eigen::MatrixXd& zs,
                            const Eigen::VectorXd& ws, double tau) {
  const Eigen::Index k = loss.out_dim();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(loss.theta.size());
  for (Eigen::Index i = 0; i < zs.rows(); ++i) {
    Eigen::VectorXd z = zs.row(i).transpose();
    switch (loss.tag) {
      case LossTag::linear:
        g += ws[i] * z;
        break;
      case LossTag::absolute_regression: {
        double resid = loss.theta.dot(z.head(k - 1)) - z[k - 1];
        if (resid > 0)
          g += ws[i] * z.head(k - 1);
        else if (resid < 0)
          g -= ws[i] * z.head(k - 1);
        break;
      }
      case LossTag::hinge:
        if (loss.theta.dot(z) < 1.0) g -= ws[i] * z;
        break;
    }
  }
  Eigen::VectorXd u = loss.lip_vector();
  Eigen::VectorXd au = loss.affine_map.transpose() * u;
  double lip = au.norm();
  if (tau > 0 && lip > 1e-15) {
    Eigen::VectorXd glip = loss.affine_map * au / lip;  // d/du ||A^T u||
    if (loss.tag == LossTag::absolute_regression)
      g += tau * glip.head(k - 1);
    else
      g += tau * glip;
  }
  return g;
}

}  // namespace

FitResult or_wdro_fit(const DiscreteMeasure& corrupted, double eps, double rho,
                      const LossSpec& family, double tau, const FitConfig& cfg) {
  check_theta(family);
  if (tau < 0) throw std::invalid_argument("tau must be nonnegative");

  auto [filtered, report] = filter_w2(corrupted,
                                      FilterConfig::practical(eps, rho, cfg.seed));

  Eigen::MatrixXd zs =
      (filtered.points() * family.affine_map.transpose()).rowwise() +
      family.offset.transpose();
  const Eigen::VectorXd& ws = filtered.weights();

  LossSpec cur = family;
  auto objective = [&](const LossSpec& l) {
    double s = 0;
    for (Eigen::Index i = 0; i < zs.rows(); ++i)
      s += ws[i] * l.inner(zs.row(i).transpose());
    return s + tau * l.lip_const();
  };

  LossSpec best = cur;
  double best_obj = objective(cur);
  bool converged = false;
  int iters = 0;
  int stalled = 0;
  for (; iters < cfg.max_iters; ++iters) {
    Eigen::VectorXd g = subgradient(cur, zs, ws, tau);
    if (g.norm() < 1e-12) {
      converged = true;
      break;
    }
    cur.theta -= cfg.step0 / std::sqrt(iters + 1.0) * g / g.norm();
    double obj = objective(cur);
    if (obj < best_obj - cfg.tol) {
      best_obj = obj;
      best = cur;
      stalled = 0;
    } else {
      if (obj < best_obj) {
        best_obj = obj;
        best = cur;
      }
      if (++stalled >= 50) {  // 50 steps without tol-sized progress
        converged = true;
        break;
      }
    }
  }
  return FitResult{std::move(best), best_obj,        converged,
                   iters,           std::move(report), std::move(filtered)};
}

double excess_risk(const LossSpec& fitted, const LossSpec& oracle_best,
                   const DiscreteMeasure& eval) {
  if (fitted.tag != oracle_best.tag)
    throw std::invalid_argument("fitted and oracle losses must share a family");
  return empirical_risk(eval, fitted) - empirical_risk(eval, oracle_best);
}

}  // namespace rtr

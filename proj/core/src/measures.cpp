#include "robusttransport/measures.hpp"

#include <stdexcept>

namespace rtr {

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() == 0) throw std::invalid_argument("measure must have at least one atom");
  if (points_.cols() == 0) throw std::invalid_argument("measure dimension must be positive");
  if (weights_.size() != points_.rows())
    throw std::invalid_argument("weights/points size mismatch");
  if ((weights_.array() < 0).any())
    throw std::invalid_argument("weights must be nonnegative");
  double total = weights_.sum();
  if (!(total > 0)) throw std::invalid_argument("total mass must be positive");
  weights_ /= total;
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd points) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(points.rows(), 1.0);
  return DiscreteMeasure(std::move(points), std::move(w));
}

DiscreteMeasure DiscreteMeasure::with_points(Eigen::MatrixXd points) const {
  if (points.rows() != points_.rows() || points.cols() != points_.cols())
    throw std::invalid_argument("with_points shape mismatch");
  DiscreteMeasure out = *this;
  out.points_ = std::move(points);
  return out;
}

bool DiscreteMeasure::is_uniform(double tol) const {
  double expected = 1.0 / static_cast<double>(size());
  return ((weights_.array() - expected).abs() < tol * 10).all();
}

ProjectionFrame::ProjectionFrame(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1 || rows_.rows() > rows_.cols())
    throw std::invalid_argument("frame must have 1 <= k <= d rows");
  Eigen::MatrixXd gram = rows_ * rows_.transpose();
  gram -= Eigen::MatrixXd::Identity(rows_.rows(), rows_.rows());
  if (gram.cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("frame rows are not orthonormal");
}

ProjectionFrame ProjectionFrame::coordinate(Eigen::Index k, Eigen::Index d) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(k, d);
  for (Eigen::Index i = 0; i < k; ++i) rows(i, i) = 1.0;
  return ProjectionFrame(std::move(rows));
}

MomentSummary moments(const DiscreteMeasure& m,
                      const std::optional<Eigen::VectorXd>& center) {
  MomentSummary out;
  out.mean = m.points().transpose() * m.weights();
  Eigen::VectorXd c = center.value_or(out.mean);
  if (c.size() != m.dim())
    throw std::invalid_argument("center dimension mismatch");
  Eigen::MatrixXd centered = m.points().rowwise() - c.transpose();
  out.covariance =
      centered.transpose() * m.weights().asDiagonal() * centered;
  // symmetrize away roundoff
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.center_override = center;
  return out;
}

DiscreteMeasure delete_and_renormalize(const DiscreteMeasure& m,
                                       const Eigen::VectorXd& keep_weights) {
  if (keep_weights.size() != m.size())
    throw std::invalid_argument("keep_weights size mismatch");
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (keep_weights[i] < -1e-15 || keep_weights[i] > m.weights()[i] + 1e-12)
      throw std::invalid_argument("keep_weights must satisfy 0 <= k_i <= w_i");
  }
  double kept = keep_weights.sum();
  if (!(kept > 0)) throw std::invalid_argument("kept mass must be positive");
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (keep_weights[i] > 0) live.push_back(i);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(live.size()), m.dim());
  Eigen::VectorXd w(static_cast<Eigen::Index>(live.size()));
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(live.size()); ++r) {
    pts.row(r) = m.points().row(live[r]);
    w[r] = keep_weights[live[r]];
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

DiscreteMeasure pushforward(const DiscreteMeasure& m, const ProjectionFrame& U) {
  if (U.dim() != m.dim()) throw std::invalid_argument("frame dimension mismatch");
  return DiscreteMeasure(m.points() * U.rows().transpose(), m.weights());
}

}  // namespace rtr

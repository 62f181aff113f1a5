#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace rtr {

/// Weighted point cloud in R^d. Weights are normalized to sum to one at
/// construction and the measure is immutable afterwards; duplicate points are
/// allowed (multisets are measures with repeated atoms).
class DiscreteMeasure {
 public:
  // points: n x d, one atom per row; weights: n nonnegative entries.
  DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights);

  static DiscreteMeasure uniform(Eigen::MatrixXd points);

  // Same weights bit-for-bit with new atom locations (corruptions move points
  // but must not perturb the normalization).
  DiscreteMeasure with_points(Eigen::MatrixXd points) const;

  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }

  bool is_uniform(double tol = 1e-12) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

struct MomentSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // second moment about center_override if set
  std::optional<Eigen::VectorXd> center_override;
};

/// k x d matrix with orthonormal rows (U U^T = I_k).
class ProjectionFrame {
 public:
  explicit ProjectionFrame(Eigen::MatrixXd rows);

  const Eigen::MatrixXd& rows() const { return rows_; }
  Eigen::Index k() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }

  static ProjectionFrame coordinate(Eigen::Index k, Eigen::Index d);

 private:
  Eigen::MatrixXd rows_;
};

MomentSummary moments(const DiscreteMeasure& m,
                      const std::optional<Eigen::VectorXd>& center = std::nullopt);

// Keep keep_weights_i mass of atom i (0 <= keep_weights_i <= w_i) and
// renormalize by the kept mass. Atoms with zero kept mass are dropped.
DiscreteMeasure delete_and_renormalize(const DiscreteMeasure& m,
                                       const Eigen::VectorXd& keep_weights);

DiscreteMeasure pushforward(const DiscreteMeasure& m, const ProjectionFrame& U);

}  // namespace rtr

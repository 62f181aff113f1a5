#include "robusttransport/spectral.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace rtr {

namespace {

void check_symmetric(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("matrix must be square");
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument("matrix is not symmetric");
}

double offdiag_frobenius(const Eigen::MatrixXd& A) {
  double s = 0;
  for (Eigen::Index p = 0; p < A.rows(); ++p)
    for (Eigen::Index q = 0; q < A.cols(); ++q)
      if (p != q) s += A(p, q) * A(p, q);
  return std::sqrt(s);
}

}  // namespace

SpectralDecomposition sym_eig(const Eigen::MatrixXd& A) {
  check_symmetric(A);
  const Eigen::Index d = A.rows();
  Eigen::MatrixXd a = 0.5 * (A + A.transpose());
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);
  const double scale = std::max(1.0, a.norm());
  const double target = 1e-12 * scale;

  for (int sweep = 0; sweep < 100 && offdiag_frobenius(a) >= target; ++sweep) {
    for (Eigen::Index p = 0; p + 1 < d; ++p) {
      for (Eigen::Index q = p + 1; q < d; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (Eigen::Index i = 0; i < d; ++i) {
          double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (Eigen::Index i = 0; i < d; ++i) {
          double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (Eigen::Index i = 0; i < d; ++i) {
          double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - s * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i) > a(j, j);
  });

  SpectralDecomposition out;
  out.eigenvalues.resize(d);
  out.eigenvectors.resize(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    out.eigenvalues[r] = a(order[r], order[r]);
    Eigen::VectorXd v = V.col(order[r]);
    // sign convention: first component of nontrivial magnitude positive
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0) v = -v;
        break;
      }
    }
    out.eigenvectors.col(r) = v;
  }
  return out;
}

double positive_part_trace(const Eigen::MatrixXd& A, double shift) {
  SpectralDecomposition e = sym_eig(A);
  double s = 0;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i)
    s += std::max(e.eigenvalues[i] - shift, 0.0);
  return s;
}

Eigen::MatrixXd nonneg_projector(const Eigen::MatrixXd& A, double shift) {
  SpectralDecomposition e = sym_eig(A);
  const Eigen::Index d = A.rows();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    if (e.eigenvalues[i] >= shift)
      P += e.eigenvectors.col(i) * e.eigenvectors.col(i).transpose();
  return P;
}

Eigen::MatrixXd w2_shrink_map(const Eigen::MatrixXd& sigma) {
  SpectralDecomposition e = sym_eig(sigma);
  const Eigen::Index d = sigma.rows();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double lam = e.eigenvalues[i];
    double coef = (lam > 1.0) ? 1.0 / std::sqrt(lam) : 1.0;
    A += coef * e.eigenvectors.col(i) * e.eigenvectors.col(i).transpose();
  }
  return A;
}

double shrink_cost(const Eigen::MatrixXd& sigma) {
  SpectralDecomposition e = sym_eig(sigma);
  double c = 0;
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
    double lam = e.eigenvalues[i];
    if (lam > 1.0) {
      double r = std::sqrt(lam) - 1.0;
      c += r * r;
    }
  }
  return c;
}

}  // namespace rtr

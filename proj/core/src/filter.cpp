#include "robusttransport/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "robusttransport/rng.hpp"
#include "robusttransport/spectral.hpp"

namespace rtr {

double FilterConfig::threshold() const {
  // p = 1: C*eps + C*rho^2/eps; p = 2: C*eps + C*rho^2
  return big_c * eps + big_c * rho * rho * std::pow(eps, 1.0 - 2.0 / p);
}

namespace {

enum class Mode { TraceObjective, TopEigenvalue };

DiscreteMeasure uniform_subset(const DiscreteMeasure& m, const std::vector<int>& idx) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(idx.size()), m.dim());
  for (size_t r = 0; r < idx.size(); ++r) pts.row(static_cast<Eigen::Index>(r)) = m.points().row(idx[r]);
  return DiscreteMeasure::uniform(std::move(pts));
}

std::pair<DiscreteMeasure, FilterReport> run_filter(const DiscreteMeasure& corrupted,
                                                    double eps, double threshold,
                                                    double sigma, Mode mode,
                                                    int max_iters,
                                                    std::uint64_t seed) {
  if (!corrupted.is_uniform())
    throw std::invalid_argument("filter requires a uniform discrete measure");
  if (eps < 0 || eps > 0.49) throw std::invalid_argument("eps must be in [0, 0.49]");

  const Eigen::Index n = corrupted.size();
  const Eigen::Index d = corrupted.dim();
  FilterReport report;

  std::vector<int> T(n);
  std::iota(T.begin(), T.end(), 0);
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double sigma2 = sigma * sigma;
  const auto floor_size =
      static_cast<Eigen::Index>(std::ceil(std::max(1.0 - 10.0 * eps, 0.0) * n));

  int iter = 0;
  for (; iter < max_iters; ++iter) {
    const double tn = static_cast<double>(T.size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
    for (int i : T) mu += corrupted.points().row(i).transpose();
    mu /= tn;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i : T) {
      Eigen::VectorXd c = corrupted.points().row(i).transpose() - mu;
      cov += c * c.transpose();
    }
    cov /= tn;

    FilterIteration rec;
    Eigen::MatrixXd proj;
    if (mode == Mode::TraceObjective) {
      SpectralDecomposition e = sym_eig(cov - sigma2 * Eigen::MatrixXd::Identity(d, d));
      proj = Eigen::MatrixXd::Zero(d, d);
      rec.trace_objective = 0;
      for (Eigen::Index i = 0; i < d; ++i)
        if (e.eigenvalues[i] >= 0) {
          proj += e.eigenvectors.col(i) * e.eigenvectors.col(i).transpose();
          rec.trace_objective += e.eigenvalues[i];
          ++rec.projector_rank;
        }
    } else {
      SpectralDecomposition e = sym_eig(cov);
      proj = e.eigenvectors.col(0) * e.eigenvectors.col(0).transpose();
      rec.trace_objective = e.eigenvalues[0];
      rec.projector_rank = 1;
    }

    if (rec.trace_objective < threshold) {
      report.iterations.push_back(std::move(rec));
      report.terminated_by_threshold = true;
      break;
    }

    rec.g_values.resize(T.size());
    for (size_t r = 0; r < T.size(); ++r) {
      Eigen::VectorXd c = corrupted.points().row(T[r]).transpose() - mu;
      rec.g_values[r] = (proj * c).squaredNorm();
    }

    const auto l_size = static_cast<size_t>(std::floor(6.0 * eps * tn));
    if (l_size == 0) {
      report.diagnostic = "L empty (6*eps*|T| < 1) with threshold unmet";
      report.iterations.push_back(std::move(rec));
      break;
    }
    // largest g first; ties by smaller original index
    std::vector<size_t> order(T.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
      if (rec.g_values[x] != rec.g_values[y]) return rec.g_values[x] > rec.g_values[y];
      return T[x] < T[y];
    });
    rec.f_values.assign(T.size(), 0.0);
    double fmax = 0;
    for (size_t r = 0; r < l_size; ++r) {
      rec.f_values[order[r]] = rec.g_values[order[r]];
      rec.L_indices.push_back(T[order[r]]);
      fmax = std::max(fmax, rec.g_values[order[r]]);
    }
    std::sort(rec.L_indices.begin(), rec.L_indices.end());

    if (fmax <= 0) {
      report.diagnostic = "degenerate: all top-g points coincide with the mean";
      report.iterations.push_back(std::move(rec));
      break;
    }

    // one uniform draw per point of T, in ascending original-index order
    std::vector<int> survivors;
    survivors.reserve(T.size());
    for (size_t r = 0; r < T.size(); ++r) {
      double u = unif(rng);
      if (u < rec.f_values[r] / fmax)
        rec.removed_indices.push_back(T[r]);
      else
        survivors.push_back(T[r]);
    }
    report.iterations.push_back(std::move(rec));
    T = std::move(survivors);

    if (T.empty() || static_cast<Eigen::Index>(T.size()) < floor_size) {
      report.diagnostic = "breakdown guard: |T| dropped below (1-10*eps)*n";
      break;
    }
  }
  if (iter == max_iters && !report.terminated_by_threshold && report.diagnostic.empty())
    report.diagnostic = "max_iters exceeded without termination";

  if (T.empty()) T.push_back(report.iterations.back().removed_indices.front());
  report.final_size = static_cast<int>(T.size());
  report.kept_indices = T;
  return {uniform_subset(corrupted, T), std::move(report)};
}

}  // namespace

std::pair<DiscreteMeasure, FilterReport> filter_w2(const DiscreteMeasure& corrupted,
                                                   const FilterConfig& cfg) {
  if (cfg.eps == 0) {
    // threshold divides by eps; the estimator is the identity map here
    FilterReport report;
    report.final_size = static_cast<int>(corrupted.size());
    report.terminated_by_threshold = true;
    report.kept_indices.resize(corrupted.size());
    std::iota(report.kept_indices.begin(), report.kept_indices.end(), 0);
    return {corrupted, std::move(report)};
  }
  return run_filter(corrupted, cfg.eps, cfg.threshold(), cfg.sigma,
                    Mode::TraceObjective, cfg.max_iters, cfg.seed);
}

DiscreteMeasure filter_standard(const DiscreteMeasure& corrupted, double eps,
                                double bound, std::uint64_t seed,
                                FilterReport* report) {
  if (eps == 0) {
    if (report) {
      report->final_size = static_cast<int>(corrupted.size());
      report->terminated_by_threshold = true;
    }
    return corrupted;
  }
  auto [out, rep] = run_filter(corrupted, eps, bound, 0.0, Mode::TopEigenvalue,
                               1000, seed);
  if (report) *report = std::move(rep);
  return out;
}

Eigen::VectorXd robust_mean(const DiscreteMeasure& corrupted, const FilterConfig& cfg) {
  auto [filtered, report] = filter_w2(corrupted, cfg);
  return filtered.points().transpose() * filtered.weights();
}

}  // namespace rtr

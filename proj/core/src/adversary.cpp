#include "robusttransport/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "robusttransport/rng.hpp"

namespace rtr {

double CorruptionPlan::average_displacement() const {
  if (displacements.rows() == 0) return 0;
  std::vector<char> replaced(displacements.rows(), 0);
  for (int i : tv_indices) replaced[i] = 1;
  double s = 0;
  for (Eigen::Index i = 0; i < displacements.rows(); ++i)
    if (!replaced[i]) s += displacements.row(i).norm();
  return s / static_cast<double>(displacements.rows());
}

namespace {

std::vector<int> pick_indices(Eigen::Index n, Eigen::Index count, std::mt19937_64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Fisher-Yates prefix
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::pair<DiscreteMeasure, CorruptionPlan> tv_corrupt(const DiscreteMeasure& clean,
                                                      double eps,
                                                      const TvStrategy& strategy,
                                                      std::uint64_t seed) {
  if (eps < 0 || eps > 0.49) throw std::invalid_argument("eps must be in [0, 0.49]");
  const Eigen::Index n = clean.size();
  const Eigen::Index d = clean.dim();
  const auto count = static_cast<Eigen::Index>(std::floor(eps * static_cast<double>(n)));

  CorruptionPlan plan;
  plan.eps = eps;
  plan.rho = 0;
  plan.displacements = Eigen::MatrixXd::Zero(n, d);
  Eigen::MatrixXd pts = clean.points();
  if (count > 0) {
    auto rng = make_rng(seed);
    plan.tv_indices = pick_indices(n, count, rng);
    Eigen::VectorXd mean = clean.points().transpose() * clean.weights();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Eigen::Index slot = 0;
    for (int i : plan.tv_indices) {
      if (const auto* c = std::get_if<ClusterStrategy>(&strategy)) {
        pts.row(i) = (mean + c->distance * c->direction).transpose();
      } else if (const auto* h = std::get_if<HeavyTailStrategy>(&strategy)) {
        Eigen::VectorXd dir(d);
        for (Eigen::Index j = 0; j < d; ++j) dir[j] = gauss(rng);
        dir.normalize();
        double r = h->scale * std::pow(1.0 - unif(rng), -1.0 / 1.5);  // Pareto(1.5)
        pts.row(i) = (mean + r * dir).transpose();
      } else {
        const auto& cp = std::get<CustomPointsStrategy>(strategy);
        pts.row(i) = cp.points.row(slot % cp.points.rows());
      }
      ++slot;
    }
  }
  return {clean.with_points(std::move(pts)), std::move(plan)};
}

std::pair<DiscreteMeasure, CorruptionPlan> w1_corrupt(const DiscreteMeasure& clean,
                                                      double rho,
                                                      const W1Strategy& strategy,
                                                      std::uint64_t seed) {
  if (rho < 0) throw std::invalid_argument("rho must be nonnegative");
  const Eigen::Index n = clean.size();
  const Eigen::Index d = clean.dim();
  (void)seed;

  CorruptionPlan plan;
  plan.eps = 0;
  plan.rho = rho;
  plan.displacements = Eigen::MatrixXd::Zero(n, d);
  if (rho > 0) {
    if (const auto* u = std::get_if<UniformShiftStrategy>(&strategy)) {
      Eigen::RowVectorXd shift = rho * u->direction.transpose();
      for (Eigen::Index i = 0; i < n; ++i) plan.displacements.row(i) = shift;
    } else {
      const auto& c = std::get<ConcentratedStrategy>(strategy);
      auto moved = static_cast<Eigen::Index>(std::ceil(c.fraction * static_cast<double>(n)));
      moved = std::max<Eigen::Index>(1, std::min(moved, n));
      // first `moved` indices under a seeded shuffle carry the whole budget
      auto rng = make_rng(seed);
      std::vector<int> idx = pick_indices(n, moved, rng);
      double per = rho * static_cast<double>(n) / static_cast<double>(moved);
      for (int i : idx) plan.displacements.row(i) = per * c.direction.transpose();
    }
  }
  Eigen::MatrixXd pts = clean.points() + plan.displacements;
  return {clean.with_points(std::move(pts)), std::move(plan)};
}

std::pair<DiscreteMeasure, CorruptionPlan> combined_corrupt(
    const DiscreteMeasure& clean, double eps, double rho,
    const TvStrategy& tv_strategy, const W1Strategy& w1_strategy,
    std::uint64_t seed) {
  auto [shifted, w1_plan] = w1_corrupt(clean, rho, w1_strategy, derive_seed(seed, 1));
  auto [corrupted, tv_plan] = tv_corrupt(shifted, eps, tv_strategy, derive_seed(seed, 2));

  CorruptionPlan plan;
  plan.eps = eps;
  plan.rho = rho;
  plan.tv_indices = tv_plan.tv_indices;
  plan.displacements = w1_plan.displacements;
  for (int i : plan.tv_indices) plan.displacements.row(i).setZero();
  return {std::move(corrupted), std::move(plan)};
}

DiscreteMeasure w1_decompose(const DiscreteMeasure& p, const DiscreteMeasure& q,
                             const Coupling& coupling, double tau) {
  if (tau <= 0 || tau >= 1) throw std::invalid_argument("tau must be in (0,1)");
  const size_t ne = coupling.edges();
  if (ne == 0) throw std::invalid_argument("empty coupling");

  struct Edge {
    double norm, mass;
    int src, tgt;
  };
  std::vector<Edge> edges(ne);
  for (size_t e = 0; e < ne; ++e) {
    double nrm =
        (q.points().row(coupling.target_idx[e]) - p.points().row(coupling.source_idx[e]))
            .norm();
    edges[e] = {nrm, coupling.mass[e], coupling.source_idx[e], coupling.target_idx[e]};
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.norm < b.norm;
  });

  // keep exactly 1-tau mass of the smallest displacements; split the boundary
  // atom fractionally
  const double keep_target = 1.0 - tau;
  std::vector<Eigen::RowVectorXd> pts;
  std::vector<double> ws;
  double kept = 0;
  for (const auto& e : edges) {
    double keep_here = std::clamp(keep_target - kept, 0.0, e.mass);
    if (keep_here > 1e-15) {
      pts.emplace_back(q.points().row(e.tgt));  // Z + Delta
      ws.push_back(keep_here);
      kept += keep_here;
    }
    double snap_here = e.mass - keep_here;
    if (snap_here > 1e-15) {
      pts.emplace_back(p.points().row(e.src));  // Z
      ws.push_back(snap_here);
    }
  }
  Eigen::MatrixXd P(static_cast<Eigen::Index>(pts.size()), p.dim());
  Eigen::VectorXd W(static_cast<Eigen::Index>(ws.size()));
  for (size_t i = 0; i < pts.size(); ++i) {
    P.row(static_cast<Eigen::Index>(i)) = pts[i];
    W[static_cast<Eigen::Index>(i)] = ws[i];
  }
  return DiscreteMeasure(std::move(P), std::move(W));
}

}  // namespace rtr

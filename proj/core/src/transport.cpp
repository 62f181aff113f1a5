#include "robusttransport/transport.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "robusttransport/rng.hpp"

namespace rtr {

namespace {

constexpr double kMassTol = 1e-13;

struct FlowEdge {
  int i, j;
  double f;
};

// Transportation problem by successive shortest augmenting paths with node
// potentials (dense Dijkstra). Supplies and demands must balance.
double solve_transport(const std::vector<double>& sup, const std::vector<double>& dem,
                       const std::function<double(int, int)>& cost,
                       std::vector<FlowEdge>* edges_out) {
  const int ns = static_cast<int>(sup.size());
  const int nt = static_cast<int>(dem.size());
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(ns, nt);

  std::vector<double> rs = sup, rd = dem;
  std::vector<double> pis(ns, 0.0), pit(nt, 0.0);
  const double inf = std::numeric_limits<double>::infinity();

  double remaining = std::accumulate(rs.begin(), rs.end(), 0.0);
  const int nv = ns + nt;
  std::vector<double> dist(nv);
  std::vector<int> parent(nv);
  std::vector<char> done(nv);

  while (remaining > kMassTol) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < ns; ++i)
      if (rs[i] > kMassTol) dist[i] = 0;

    // dense Dijkstra over the residual bipartite graph
    for (int iter = 0; iter < nv; ++iter) {
      int u = -1;
      double best = inf;
      for (int v = 0; v < nv; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u < 0) break;
      done[u] = 1;
      if (u < ns) {
        for (int j = 0; j < nt; ++j) {
          double rc = cost(u, j) + pis[u] - pit[j];
          if (rc < 0) rc = 0;
          if (dist[u] + rc < dist[ns + j]) {
            dist[ns + j] = dist[u] + rc;
            parent[ns + j] = u;
          }
        }
      } else {
        int j = u - ns;
        for (int i = 0; i < ns; ++i) {
          if (flow(i, j) <= kMassTol) continue;
          double rc = pit[j] - cost(i, j) - pis[i];
          if (rc < 0) rc = 0;
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            parent[i] = u;
          }
        }
      }
    }

    int target = -1;
    double dbest = inf;
    for (int j = 0; j < nt; ++j)
      if (rd[j] > kMassTol && dist[ns + j] < dbest) {
        dbest = dist[ns + j];
        target = ns + j;
      }
    if (target < 0)
      throw std::runtime_error("transport solve: no augmenting path (unbalanced instance?)");

    for (int i = 0; i < ns; ++i) pis[i] += std::min(dist[i], dbest);
    for (int j = 0; j < nt; ++j) pit[j] += std::min(dist[ns + j], dbest);

    // trace path and find bottleneck
    double delta = rd[target - ns];
    int v = target;
    while (parent[v] >= 0) {
      int u = parent[v];
      if (u < ns && v >= ns) {
        // forward arc, uncapacitated
      } else {
        delta = std::min(delta, flow(v, u - ns));
      }
      v = u;
    }
    delta = std::min(delta, rs[v]);

    v = target;
    while (parent[v] >= 0) {
      int u = parent[v];
      if (u < ns && v >= ns) {
        flow(u, v - ns) += delta;
      } else {
        flow(v, u - ns) -= delta;
      }
      v = u;
    }
    rs[v] -= delta;
    rd[target - ns] -= delta;
    remaining -= delta;
  }

  double total = 0;
  if (edges_out) edges_out->clear();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j)
      if (flow(i, j) > kMassTol) {
        total += flow(i, j) * cost(i, j);
        if (edges_out) edges_out->push_back({i, j, flow(i, j)});
      }
  return total;
}

}  // namespace

double w1_1d(const DiscreteMeasure& a, const DiscreteMeasure& b, Coupling* coupling) {
  if (a.dim() != 1 || b.dim() != 1)
    throw std::invalid_argument("w1_1d requires 1-D measures");
  std::vector<int> ia(a.size()), ib(b.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::sort(ia.begin(), ia.end(),
            [&](int x, int y) { return a.points()(x, 0) < a.points()(y, 0); });
  std::sort(ib.begin(), ib.end(),
            [&](int x, int y) { return b.points()(x, 0) < b.points()(y, 0); });

  if (coupling) {
    *coupling = Coupling{};
    coupling->p = 1;
  }
  double cost = 0;
  size_t pa = 0, pb = 0;
  double ra = a.weights()[ia[0]], rb = b.weights()[ib[0]];
  while (pa < ia.size() && pb < ib.size()) {
    double m = std::min(ra, rb);
    double va = a.points()(ia[pa], 0), vb = b.points()(ib[pb], 0);
    cost += m * std::abs(va - vb);
    if (coupling && m > 0) {
      coupling->source_idx.push_back(ia[pa]);
      coupling->target_idx.push_back(ib[pb]);
      coupling->mass.push_back(m);
    }
    ra -= m;
    rb -= m;
    if (ra <= kMassTol) {
      if (++pa < ia.size()) ra = a.weights()[ia[pa]];
    }
    if (rb <= kMassTol) {
      if (++pb < ib.size()) rb = b.weights()[ib[pb]];
    }
  }
  if (coupling) coupling->cost_p = cost;
  return cost;
}

ExactResult wp_exact(const DiscreteMeasure& a, const DiscreteMeasure& b, int p) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
  if (a.size() * b.size() > 1000000)
    throw std::invalid_argument("instance too large for exact solver");

  auto cost = [&](int i, int j) {
    double d = (a.points().row(i) - b.points().row(j)).norm();
    return p == 1 ? d : d * d;
  };
  std::vector<double> sup(a.weights().data(), a.weights().data() + a.size());
  std::vector<double> dem(b.weights().data(), b.weights().data() + b.size());
  std::vector<FlowEdge> edges;
  double total = solve_transport(sup, dem, cost, &edges);

  ExactResult res;
  res.coupling.p = p;
  res.coupling.cost_p = total;
  for (const auto& e : edges) {
    res.coupling.source_idx.push_back(e.i);
    res.coupling.target_idx.push_back(e.j);
    res.coupling.mass.push_back(e.f);
  }
  res.value = p == 1 ? total : std::sqrt(std::max(total, 0.0));
  return res;
}

double robust_wp(const DiscreteMeasure& a, const DiscreteMeasure& b, double eps,
                 int p) {
  if (eps < 0 || eps >= 1) throw std::invalid_argument("eps must be in [0,1)");
  if (p != 1 && p != 2) throw std::invalid_argument("p must be 1 or 2");
  if (eps == 0) return wp_exact(a, b, p).value;
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");

  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  // slack source feeds b for free (mass added to mu'), slack sink absorbs
  // removed mass of a for free; the direct slack-slack arc lets unused budget
  // pass through.
  auto cost = [&](int i, int j) {
    if (i == na || j == nb) return 0.0;
    double d = (a.points().row(i) - b.points().row(j)).norm();
    return p == 1 ? d : d * d;
  };
  std::vector<double> sup(a.weights().data(), a.weights().data() + na);
  sup.push_back(eps);
  std::vector<double> dem(b.weights().data(), b.weights().data() + nb);
  dem.push_back(eps);
  double total = solve_transport(sup, dem, cost, nullptr);
  return p == 1 ? total : std::sqrt(std::max(total, 0.0));
}

double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  std::map<std::vector<double>, std::pair<double, double>> atoms;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    std::vector<double> key(a.points().row(i).begin(), a.points().row(i).end());
    atoms[key].first += a.weights()[i];
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    std::vector<double> key(b.points().row(i).begin(), b.points().row(i).end());
    atoms[key].second += b.weights()[i];
  }
  double s = 0;
  for (const auto& [k, w] : atoms) s += std::abs(w.first - w.second);
  return 0.5 * s;
}

namespace {

// Orthonormalize the rows of M by QR of M^T; signs fixed by diag(R).
Eigen::MatrixXd qr_retract(const Eigen::MatrixXd& M) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M.transpose());
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(M.cols(), M.rows());
  Eigen::MatrixXd R = qr.matrixQR().topLeftCorner(M.rows(), M.rows())
                          .triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    if (R(i, i) < 0) Q.col(i) = -Q.col(i);
  return Q.transpose();
}

double eval_direction(const DiscreteMeasure& a, const DiscreteMeasure& b,
                      const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
  DiscreteMeasure pa(a.points() * theta, a.weights());
  DiscreteMeasure pb(b.points() * theta, b.weights());
  Coupling cpl;
  double val = w1_1d(pa, pb, &cpl);
  if (grad) {
    grad->setZero(a.dim());
    for (size_t e = 0; e < cpl.edges(); ++e) {
      Eigen::VectorXd delta =
          (a.points().row(cpl.source_idx[e]) - b.points().row(cpl.target_idx[e]))
              .transpose();
      double s = theta.dot(delta);
      if (s > 0)
        *grad += cpl.mass[e] * delta;
      else if (s < 0)
        *grad -= cpl.mass[e] * delta;
    }
  }
  return val;
}

double eval_frame_exact(const DiscreteMeasure& a, const DiscreteMeasure& b,
                        const Eigen::MatrixXd& U, Coupling* cpl) {
  ProjectionFrame frame(qr_retract(U));
  DiscreteMeasure pa = pushforward(a, frame);
  DiscreteMeasure pb = pushforward(b, frame);
  ExactResult r = wp_exact(pa, pb, 1);
  if (cpl) *cpl = r.coupling;
  return r.value;
}

}  // namespace

SlicedResult max_sliced_w1(const DiscreteMeasure& a, const DiscreteMeasure& b,
                           int k, const SlicedConfig& cfg) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  const int d = static_cast<int>(a.dim());
  if (k < 1 || k > d) throw std::invalid_argument("k must satisfy 1 <= k <= d");

  SlicedResult best;
  best.value = -1;
  best.restarts_used = cfg.restarts;
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (k == 1) {
    for (int r = 0; r < cfg.restarts; ++r) {
      auto rng = make_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
      Eigen::VectorXd theta(d);
      if (r == 0 && cfg.init_frame && cfg.init_frame->rows() == 1 &&
          cfg.init_frame->cols() == d) {
        theta = cfg.init_frame->row(0).transpose();
      } else {
        for (int i = 0; i < d; ++i) theta[i] = gauss(rng);
      }
      theta.normalize();
      for (int t = 0; t < cfg.steps; ++t) {
        Eigen::VectorXd grad;
        double val = eval_direction(a, b, theta, &grad);
        if (val > best.value) {
          best.value = val;
          best.frame = theta.transpose();
        }
        theta += (cfg.step0 / std::sqrt(t + 1.0)) * grad;
        double nrm = theta.norm();
        if (nrm < 1e-14) {
          for (int i = 0; i < d; ++i) theta[i] = gauss(rng);
          nrm = theta.norm();
        }
        theta /= nrm;
      }
      double val = eval_direction(a, b, theta, nullptr);
      if (val > best.value) {
        best.value = val;
        best.frame = theta.transpose();
      }
    }
    // polish: harmonically decaying steps from the incumbent squeeze out the
    // O(step0/sqrt(steps)) bias of the main schedule
    Eigen::VectorXd theta = best.frame.row(0).transpose();
    for (int t = 0; t < cfg.steps; ++t) {
      Eigen::VectorXd grad;
      double val = eval_direction(a, b, theta, &grad);
      if (val > best.value) {
        best.value = val;
        best.frame = theta.transpose();
      }
      if (grad.norm() < 1e-14) break;
      // fixed-point jump: the coupling subgradient maximizes the linearization
      Eigen::VectorXd cand = grad.normalized();
      double cval = eval_direction(a, b, cand, nullptr);
      if (cval > val + 1e-15) {
        theta = cand;
        continue;
      }
      if ((cand - theta).norm() < 1e-12) break;
      theta = (theta + cfg.step0 / (10.0 + t) * grad).normalized();
    }
    // final recomputation at the reported frame
    theta = best.frame.row(0).transpose();
    best.value = eval_direction(a, b, theta, nullptr);
    return best;
  }

  if (k == d) {
    // every orthogonal frame gives the same value: plain W1
    best.frame = Eigen::MatrixXd::Identity(d, d);
    best.value = eval_frame_exact(a, b, best.frame, nullptr);
    return best;
  }

  for (int r = 0; r < cfg.restarts; ++r) {
    auto rng = make_rng(derive_seed(cfg.seed, 0x5f1ced ^ static_cast<std::uint64_t>(r)));
    Eigen::MatrixXd U(k, d);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < d; ++j) U(i, j) = gauss(rng);
    if (r == 0 && cfg.init_frame && cfg.init_frame->rows() <= k &&
        cfg.init_frame->cols() == d) {
      // warm start: keep the supplied rows, pad with random complement rows so
      // the k-sweep is monotone on a shared seed schedule
      U.topRows(cfg.init_frame->rows()) = *cfg.init_frame;
    }
    U = qr_retract(U);

    Coupling cpl;
    double val = eval_frame_exact(a, b, U, &cpl);
    if (val > best.value) {
      best.value = val;
      best.frame = U;
    }
    for (int t = 1; t <= cfg.steps; ++t) {
      // subgradient of sum_e m_e ||U delta_e|| under the current coupling
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, d);
      for (size_t e = 0; e < cpl.edges(); ++e) {
        Eigen::VectorXd delta =
            (a.points().row(cpl.source_idx[e]) - b.points().row(cpl.target_idx[e]))
                .transpose();
        Eigen::VectorXd ud = U * delta;
        double nrm = ud.norm();
        if (nrm > 1e-14) G += (cpl.mass[e] / nrm) * ud * delta.transpose();
      }
      U = qr_retract(U + (cfg.step0 / std::sqrt(static_cast<double>(t))) * G);
      if (t % cfg.ot_every == 0 || t == cfg.steps) {
        val = eval_frame_exact(a, b, U, &cpl);
        if (val > best.value) {
          best.value = val;
          best.frame = U;
        }
      }
    }
  }
  // polish the incumbent with per-step couplings and harmonic decay
  {
    Eigen::MatrixXd U = best.frame;
    Coupling cpl;
    double val = eval_frame_exact(a, b, U, &cpl);
    const int polish = std::min(cfg.steps, 20);
    for (int t = 0; t < polish; ++t) {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, d);
      for (size_t e = 0; e < cpl.edges(); ++e) {
        Eigen::VectorXd delta =
            (a.points().row(cpl.source_idx[e]) - b.points().row(cpl.target_idx[e]))
                .transpose();
        Eigen::VectorXd ud = U * delta;
        double nrm = ud.norm();
        if (nrm > 1e-14) G += (cpl.mass[e] / nrm) * ud * delta.transpose();
      }
      if (G.norm() < 1e-14) break;
      U = qr_retract(U + (cfg.step0 / (5.0 + t)) * G);
      val = eval_frame_exact(a, b, U, &cpl);
      if (val > best.value) {
        best.value = val;
        best.frame = U;
      }
    }
  }
  best.value = eval_frame_exact(a, b, best.frame, nullptr);
  return best;
}

}  // namespace rtr

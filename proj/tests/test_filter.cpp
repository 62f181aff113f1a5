#include "doctest.h"

#include <random>

#include "robusttransport/adversary.hpp"
#include "robusttransport/filter.hpp"
#include "robusttransport/rng.hpp"
#include "robusttransport/spectral.hpp"

using namespace rtr;

namespace {

DiscreteMeasure gaussian_measure(int n, int d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
  return DiscreteMeasure::uniform(std::move(pts));
}

Eigen::VectorXd e1(int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v[0] = 1;
  return v;
}

}  // namespace

TEST_CASE("theory preset terminates immediately on bounded data") {
  DiscreteMeasure m = gaussian_measure(200, 5, 401);
  FilterConfig cfg;  // sigma = 50, C = 1e10
  cfg.eps = 0.05;
  cfg.rho = 0.1;
  auto [out, report] = filter_w2(m, cfg);
  CHECK(report.terminated_by_threshold);
  CHECK(report.iterations.size() == 1);
  CHECK(out.size() == m.size());
  CHECK((out.points() - m.points()).norm() == doctest::Approx(0.0));
}

TEST_CASE("eps = 0 bypasses filtering entirely") {
  DiscreteMeasure m = gaussian_measure(50, 3, 402);
  FilterConfig cfg = FilterConfig::practical(0.0, 0.5, 1);
  auto [out, report] = filter_w2(m, cfg);
  CHECK(out.size() == m.size());
  CHECK(report.terminated_by_threshold);
  CHECK(report.kept_indices.size() == 50);
}

TEST_CASE("threshold formula covers both p variants") {
  FilterConfig c1 = FilterConfig::practical(0.04, 0.3, 0, 1);
  CHECK(c1.threshold() == doctest::Approx(20 * 0.04 + 20 * 0.09 / 0.04));
  FilterConfig c2 = FilterConfig::practical(0.04, 0.3, 0, 2);
  CHECK(c2.threshold() == doctest::Approx(20 * 0.04 + 20 * 0.09));
}

TEST_CASE("trace objective matches the spectral functional each iteration") {
  DiscreteMeasure clean = gaussian_measure(400, 6, 403);
  auto [corrupted, plan] =
      tv_corrupt(clean, 0.1, ClusterStrategy{e1(6), 25.0}, 404);
  FilterConfig cfg = FilterConfig::practical(0.1, 0.0, 405);
  auto [out, report] = filter_w2(corrupted, cfg);
  REQUIRE(!report.iterations.empty());

  // replay iteration 1 on the full input
  Eigen::MatrixXd cov = moments(corrupted).covariance;
  double want = positive_part_trace(cov, cfg.sigma * cfg.sigma);
  CHECK(report.iterations[0].trace_objective == doctest::Approx(want).epsilon(1e-8));
  for (const auto& it : report.iterations)
    CHECK(it.trace_objective >= -1e-10);
}

TEST_CASE("practical preset removes a planted cluster") {
  const int n = 2000, d = 20;
  DiscreteMeasure clean = gaussian_measure(n, d, 406);
  auto [corrupted, plan] =
      tv_corrupt(clean, 0.05, ClusterStrategy{e1(d), 10.0 * std::sqrt(double(d))}, 407);
  FilterConfig cfg = FilterConfig::practical(0.05, 0.0, 408);
  auto [out, report] = filter_w2(corrupted, cfg);

  std::vector<char> planted(n, 0);
  for (int i : plan.tv_indices) planted[i] = 1;
  int planted_kept = 0, clean_removed = 0;
  std::vector<char> kept(n, 0);
  for (int i : report.kept_indices) kept[i] = 1;
  for (int i = 0; i < n; ++i) {
    if (planted[i] && kept[i]) ++planted_kept;
    if (!planted[i] && !kept[i]) ++clean_removed;
  }
  const int planted_total = static_cast<int>(plan.tv_indices.size());
  CHECK(planted_total - planted_kept >= int(0.9 * planted_total));
  CHECK(clean_removed <= int(2 * 0.05 * n));
  CHECK(report.terminated_by_threshold);

  // termination certificate on the output measure
  Eigen::MatrixXd cov_out = moments(out).covariance;
  CHECK(positive_part_trace(cov_out, cfg.sigma * cfg.sigma) < cfg.threshold());
}

TEST_CASE("non-terminating iterations strictly shrink T") {
  DiscreteMeasure clean = gaussian_measure(500, 8, 409);
  auto [corrupted, plan] =
      tv_corrupt(clean, 0.08, ClusterStrategy{e1(8), 20.0}, 410);
  FilterConfig cfg = FilterConfig::practical(0.08, 0.0, 411);
  auto [out, report] = filter_w2(corrupted, cfg);
  size_t cur = 500;
  for (size_t i = 0; i + 1 < report.iterations.size(); ++i) {
    CHECK(!report.iterations[i].removed_indices.empty());
    cur -= report.iterations[i].removed_indices.size();
  }
  CHECK(static_cast<int>(cur) == report.final_size);
  // |L| = floor(6 eps |T|) on the first iteration
  if (!report.iterations.empty() && !report.iterations[0].L_indices.empty())
    CHECK(report.iterations[0].L_indices.size() ==
          static_cast<size_t>(std::floor(6 * 0.08 * 500)));
}

TEST_CASE("filter is deterministic given the seed") {
  DiscreteMeasure clean = gaussian_measure(300, 5, 412);
  auto [corrupted, plan] = tv_corrupt(clean, 0.1, ClusterStrategy{e1(5), 15.0}, 413);
  FilterConfig cfg = FilterConfig::practical(0.1, 0.0, 414);
  auto [a, ra] = filter_w2(corrupted, cfg);
  auto [b, rb] = filter_w2(corrupted, cfg);
  CHECK(ra.kept_indices == rb.kept_indices);
  CHECK((a.points() - b.points()).norm() == 0.0);
}

TEST_CASE("non-uniform input is rejected") {
  Eigen::MatrixXd pts(3, 2);
  pts << 0, 0, 1, 1, 2, 2;
  Eigen::VectorXd w(3);
  w << 1, 2, 3;
  DiscreteMeasure m(pts, w);
  FilterConfig cfg = FilterConfig::practical(0.1, 0.0, 1);
  CHECK_THROWS(filter_w2(m, cfg));
}

TEST_CASE("filter_standard leaves isotropic data alone and strips a spike") {
  DiscreteMeasure m = gaussian_measure(400, 4, 415);
  DiscreteMeasure same = filter_standard(m, 0.05, 3.0, 416);
  CHECK(same.size() == m.size());

  // plant outliers along e1 to create a rank-one spike
  auto [spiked, plan] = tv_corrupt(m, 0.1, ClusterStrategy{e1(4), 30.0}, 417);
  FilterReport report;
  DiscreteMeasure out = filter_standard(spiked, 0.1, 3.0, 418, &report);
  if (report.terminated_by_threshold) {
    Eigen::MatrixXd cov = moments(out).covariance;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    CHECK(es.eigenvalues().maxCoeff() <= 3.0 + 1e-8);
  }
  std::vector<char> planted(400, 0);
  for (int i : plan.tv_indices) planted[i] = 1;
  int planted_kept = 0;
  for (int i : report.kept_indices)
    if (planted[i]) ++planted_kept;
  CHECK(planted_kept <= static_cast<int>(plan.tv_indices.size()) / 2);
}

TEST_CASE("robust_mean reduces to the sample mean without corruption") {
  DiscreteMeasure m = gaussian_measure(100, 3, 419);
  FilterConfig cfg = FilterConfig::practical(0.0, 0.0, 1);
  Eigen::VectorXd mu = robust_mean(m, cfg);
  Eigen::VectorXd want = m.points().transpose() * m.weights();
  CHECK((mu - want).norm() <= 1e-12);
}

TEST_CASE("robust_mean resists a far cluster") {
  const int n = 1000, d = 8;
  DiscreteMeasure clean = gaussian_measure(n, d, 420);
  Eigen::VectorXd mu_clean = clean.points().transpose() * clean.weights();
  auto [corrupted, plan] = tv_corrupt(clean, 0.1, ClusterStrategy{e1(d), 100.0}, 421);
  Eigen::VectorXd mu_naive = corrupted.points().transpose() * corrupted.weights();
  FilterConfig cfg = FilterConfig::practical(0.1, 0.0, 422);
  Eigen::VectorXd mu_robust = robust_mean(corrupted, cfg);
  double naive_err = (mu_naive - mu_clean).norm();
  double robust_err = (mu_robust - mu_clean).norm();
  CHECK(naive_err >= 5.0);
  CHECK(robust_err <= naive_err / 5.0);
}

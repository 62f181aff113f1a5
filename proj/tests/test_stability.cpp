#include "doctest.h"

#include <random>

#include "robusttransport/rng.hpp"
#include "robusttransport/stability.hpp"

using namespace rtr;

namespace {

DiscreteMeasure measure_1d(std::initializer_list<double> values) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) pts(i++, 0) = v;
  return DiscreteMeasure::uniform(std::move(pts));
}

DiscreteMeasure random_measure(int n, int d, std::uint64_t seed, double spread = 1.5) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, spread);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
  return DiscreteMeasure::uniform(std::move(pts));
}

// max mean shift over deletions of exactly j whole atoms (uniform weights)
double enumeration_oracle_1d(const DiscreteMeasure& p, int j) {
  const int n = static_cast<int>(p.size());
  double mu = p.points().col(0).mean();
  double best = 0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) != n - j) continue;
    double s = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) s += p.points()(i, 0);
    best = std::max(best, std::abs(s / (n - j) - mu));
  }
  return best;
}

}  // namespace

TEST_CASE("mean_resilience_1d closed cases") {
  CHECK(mean_resilience_1d(measure_1d({0, 1}), 0.5) == doctest::Approx(0.5));
  CHECK(mean_resilience_1d(measure_1d({3.7}), 0.25) == doctest::Approx(0.0));
  CHECK_THROWS(mean_resilience_1d(measure_1d({0, 1}), 0.0));
  CHECK_THROWS(mean_resilience_1d(measure_1d({0, 1}), 1.0));
}

TEST_CASE("mean_resilience_1d matches whole-atom enumeration at eps = j/n") {
  for (int r = 0; r < 10; ++r) {
    const int n = 10;
    DiscreteMeasure p = random_measure(n, 1, derive_seed(501, r), 2.0);
    for (int j : {1, 2, 4}) {
      double got = mean_resilience_1d(p, double(j) / n);
      double want = enumeration_oracle_1d(p, j);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, want));
    }
  }
}

TEST_CASE("large-eps identity holds to near machine precision") {
  for (int r = 0; r < 50; ++r) {
    DiscreteMeasure p = random_measure(15, 1, derive_seed(502, r), 2.0);
    for (double eps : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
      double lhs = mean_resilience_1d(p, 1.0 - eps);
      double rhs = (1.0 - eps) / eps * mean_resilience_1d(p, eps);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST_CASE("mean_resilience equals the 1-D value in dimension one") {
  DiscreteMeasure p = random_measure(12, 1, 503);
  CHECK(mean_resilience(p, 0.25) == doctest::Approx(mean_resilience_1d(p, 0.25)));
}

TEST_CASE("mean_resilience is rotation invariant") {
  DiscreteMeasure p = random_measure(20, 2, 504);
  double theta = 0.83;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  DiscreteMeasure q(p.points() * rot.transpose(), p.weights());
  double a = mean_resilience(p, 0.2);
  double b = mean_resilience(q, 0.2);
  CHECK(a == doctest::Approx(b).epsilon(1e-6));
}

TEST_CASE("mean_resilience matches extreme-point enumeration in 2-D") {
  for (int r = 0; r < 5; ++r) {
    const int n = 8;
    DiscreteMeasure p = random_measure(n, 2, derive_seed(505, r));
    const double eps = 0.3;
    Eigen::VectorXd mu = p.points().transpose() * p.weights();
    double best = 0;
    // extreme deletions: whole subset plus one fractional atom, budget exact
    for (int mask = 0; mask < (1 << n); ++mask) {
      double deleted = 0;
      for (int i = 0; i < n; ++i)
        if (mask & (1 << i)) deleted += p.weights()[i];
      if (deleted > eps + 1e-12) continue;
      double leftover = eps - deleted;
      for (int f = -1; f < n; ++f) {
        if (f >= 0 && ((mask >> f) & 1)) continue;
        if (f < 0 && leftover > 1e-12) continue;
        if (f >= 0 && p.weights()[f] < leftover) continue;
        Eigen::VectorXd keep = p.weights();
        for (int i = 0; i < n; ++i)
          if (mask & (1 << i)) keep[i] = 0;
        if (f >= 0) keep[f] -= leftover;
        Eigen::VectorXd mu_q = p.points().transpose() * keep / keep.sum();
        best = std::max(best, (mu_q - mu).norm());
      }
    }
    double got = mean_resilience(p, eps);
    CHECK(got == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("pth_order_resilience basics and homogeneity") {
  CHECK(pth_order_resilience(measure_1d({2.0}), 0.3, 2) == doctest::Approx(0.0));

  DiscreteMeasure p = random_measure(15, 3, 506);
  const double c = 2.5;
  DiscreteMeasure scaled(c * p.points(), p.weights());
  double t2 = pth_order_resilience(p, 0.2, 2);
  double t2s = pth_order_resilience(scaled, 0.2, 2);
  CHECK(t2s == doctest::Approx(c * c * t2).epsilon(1e-10));
  double t1 = pth_order_resilience(p, 0.2, 1);
  double t1s = pth_order_resilience(scaled, 0.2, 1);
  CHECK(t1s == doctest::Approx(c * t1).epsilon(1e-10));
}

TEST_CASE("resilience monotonicity chain") {
  for (int r = 0; r < 20; ++r) {
    DiscreteMeasure p = random_measure(18, 3, derive_seed(507, r));
    double tau = mean_resilience(p, 0.2);
    double tau1 = pth_order_resilience(p, 0.2, 1);
    double tau2 = pth_order_resilience(p, 0.2, 2);
    CHECK(tau <= tau1 + 1e-9);
    CHECK(tau1 <= std::sqrt(tau2) + 1e-9);
  }
}

TEST_CASE("stability_violation finds the obvious two-point witness") {
  Eigen::MatrixXd pts(2, 1);
  pts << -10.0, 10.0;
  DiscreteMeasure p = DiscreteMeasure::uniform(pts);
  StabilityParams params{0.4, 0.5, std::nullopt};
  StabilitySearchConfig cfg;
  auto w = stability_violation(p, params, cfg);
  REQUIRE(w.has_value());
  CHECK(w->kind == "mean");
  CHECK(w->violation > 0);
}

TEST_CASE("gaussian samples pass the 5*sqrt(eps) stability check") {
  DiscreteMeasure p = random_measure(500, 4, 508, 1.0);
  const double eps = 0.05;
  StabilityParams params{eps, 5.0 * std::sqrt(eps), std::nullopt};
  StabilitySearchConfig cfg;
  cfg.directions = 32;
  cfg.ascent_steps = 40;
  auto w = stability_violation(p, params, cfg);
  CHECK(!w.has_value());
}

TEST_CASE("exhaustive mode confirms heuristic witnesses") {
  for (int r = 0; r < 5; ++r) {
    DiscreteMeasure p = random_measure(10, 2, derive_seed(509, r), 4.0);
    StabilityParams params{0.2, 0.25, std::nullopt};
    StabilitySearchConfig heur;
    heur.directions = 32;
    heur.ascent_steps = 30;
    auto hw = stability_violation(p, params, heur);
    if (hw.has_value()) {
      StabilitySearchConfig ex;
      ex.exhaustive = true;
      auto ew = stability_violation(p, params, ex);
      CHECK(ew.has_value());
    }
  }
  DiscreteMeasure big = random_measure(20, 2, 510);
  StabilitySearchConfig ex;
  ex.exhaustive = true;
  CHECK_THROWS(stability_violation(big, StabilityParams{0.2, 0.25, std::nullopt}, ex));
}

TEST_CASE("certificate_bound closed cases") {
  CHECK(certificate_bound(0, 0, 0.1, 1, 3) == doctest::Approx(0.0));
  CHECK(certificate_bound(0.1, 0.0, 0.01, 1, 1) ==
        doctest::Approx(21.0 * 0.1 / 0.99));
  CHECK_THROWS(certificate_bound(0.1, 0.1, 0.0, 1, 1));
  CHECK_THROWS(certificate_bound(0.1, 0.1, 0.1, 3, 1));
}

TEST_CASE("certificate bound dominates measured deletions end to end") {
  // delta_tilde/eta_tilde measured as the instance's own worst deletion shifts;
  // the lemma constants then dominate comfortably
  for (int r = 0; r < 5; ++r) {
    const int n = 10;
    DiscreteMeasure p = random_measure(n, 1, derive_seed(511, r));
    const double eps = 0.2;
    double delta = mean_resilience_1d(p, eps);
    double eta = std::sqrt(pth_order_resilience(p, eps, 2));
    double bound = certificate_bound(delta, eta, eps, 1, 1);
    CHECK(delta <= bound + 1e-12);
  }
}

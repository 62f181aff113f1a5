#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "robusttransport/adversary.hpp"
#include "robusttransport/experiment.hpp"
#include "robusttransport/io.hpp"
#include "robusttransport/rng.hpp"

using namespace rtr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("rtr_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DiscreteMeasure random_measure(int n, int d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Eigen::MatrixXd pts(n, d);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
    w[i] = unif(rng);
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

}  // namespace

TEST_CASE("csv round trip is exact") {
  fs::path dir = temp_dir("csv");
  DiscreteMeasure m = random_measure(25, 3, 701);
  write_csv(dir / "m.csv", m);
  DiscreteMeasure back = read_csv(dir / "m.csv");
  CHECK(back.size() == m.size());
  CHECK((back.points() - m.points()).norm() == 0.0);
  CHECK((back.weights() - m.weights()).norm() == 0.0);
}

TEST_CASE("csv without a weight column is uniform") {
  fs::path dir = temp_dir("csv_nw");
  std::ofstream out(dir / "m.csv");
  out << "x1,x2\n1,2\n3,4\n";
  out.close();
  DiscreteMeasure m = read_csv(dir / "m.csv");
  CHECK(m.size() == 2);
  CHECK(m.is_uniform());
  CHECK(m.points()(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("csv parse errors carry line numbers") {
  fs::path dir = temp_dir("csv_err");
  {
    std::ofstream out(dir / "bad.csv");
    out << "w,x1\n0.5,1\n0.5,oops\n";
  }
  try {
    read_csv(dir / "bad.csv");
    CHECK(false);
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  {
    std::ofstream out(dir / "short.csv");
    out << "w,x1,x2\n0.5,1\n";
  }
  CHECK_THROWS(read_csv(dir / "short.csv"));
  CHECK_THROWS(read_csv(dir / "missing.csv"));
}

TEST_CASE("plan, report and loss json round trips") {
  DiscreteMeasure clean = random_measure(20, 2, 702);
  Eigen::VectorXd dir2(2);
  dir2 << 1, 0;
  auto [out, plan] = combined_corrupt(
      DiscreteMeasure::uniform(clean.points()), 0.1, 0.2,
      ClusterStrategy{dir2, 5.0}, UniformShiftStrategy{dir2}, 3);
  CorruptionPlan back = plan_from_json(plan_to_json(plan));
  CHECK(back.eps == plan.eps);
  CHECK(back.tv_indices == plan.tv_indices);
  CHECK((back.displacements - plan.displacements).norm() == 0.0);

  LossSpec l;
  l.tag = LossTag::hinge;
  l.affine_map = Eigen::MatrixXd::Identity(2, 2);
  l.offset = Eigen::VectorXd::Ones(2);
  l.theta = Eigen::VectorXd::Ones(2);
  LossSpec lback = loss_from_json(loss_to_json(l));
  CHECK(lback.tag == LossTag::hinge);
  CHECK((lback.theta - l.theta).norm() == 0.0);
  CHECK_THROWS(loss_from_json(nlohmann::json{{"family", "nope"}}));
}

TEST_CASE("config parsing fills defaults") {
  nlohmann::json j{{"distribution", {{"kind", "gaussian"}, {"dim", 7}}},
                   {"n", 100},
                   {"eps_grid", {0.1}},
                   {"rho_grid", {0.0}},
                   {"trials", 2}};
  ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.dim == 7);
  CHECK(cfg.k_list == std::vector<int>{1, 2, 5, 7});
  CHECK_THROWS(config_from_json(nlohmann::json{{"eps_grid", nlohmann::json::array()}}));
}

TEST_CASE("loglog_slope recovers a power law") {
  std::vector<double> x{0.01, 0.02, 0.05, 0.1};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 0.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("cmd_simulate: zero budgets give byte-identical clean and corrupted") {
  ExperimentConfig cfg;
  cfg.dim = 3;
  cfg.n = 40;
  cfg.eps_grid = {0.0};
  cfg.rho_grid = {0.0};
  cfg.k_list = {1};
  cfg.trials = 1;
  cfg.master_seed = 9;
  cfg.output_dir = temp_dir("sim0");
  CHECK(cmd_simulate(cfg) == 0);
  fs::path cell = cfg.output_dir / "trial_000" / "eps0_rho0";
  CHECK(slurp(cell / "clean.csv") == slurp(cell / "corrupted.csv"));
}

TEST_CASE("cmd_simulate is deterministic and its budgets verify") {
  ExperimentConfig cfg;
  cfg.dim = 2;
  cfg.n = 60;
  cfg.eps_grid = {0.1};
  cfg.rho_grid = {0.2};
  cfg.k_list = {1};
  cfg.trials = 2;
  cfg.master_seed = 10;
  cfg.output_dir = temp_dir("sim_a");
  CHECK(cmd_simulate(cfg) == 0);
  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = temp_dir("sim_b");
  CHECK(cmd_simulate(cfg2) == 0);
  fs::path cell = fs::path("trial_001") / "eps0_rho0";
  CHECK(slurp(cfg.output_dir / cell / "corrupted.csv") ==
        slurp(cfg2.output_dir / cell / "corrupted.csv"));

  std::ostringstream log;
  CHECK(cmd_verify("budgets", cfg, log) == 0);
}

TEST_CASE("cmd_filter writes an estimate and a report") {
  ExperimentConfig cfg;
  cfg.dim = 4;
  cfg.n = 150;
  cfg.eps_grid = {0.1};
  cfg.rho_grid = {0.0};
  cfg.output_dir = temp_dir("filt");
  DiscreteMeasure clean = sample_gaussian(150, 4, 11);
  Eigen::VectorXd dir4 = Eigen::VectorXd::Zero(4);
  dir4[0] = 1;
  auto [corrupted, plan] = tv_corrupt(clean, 0.1, ClusterStrategy{dir4, 40.0}, 12);
  write_csv(cfg.output_dir / "in.csv", corrupted);
  CHECK(cmd_filter(cfg.output_dir / "in.csv", cfg) == 0);
  DiscreteMeasure est = read_csv(cfg.output_dir / "estimate.csv");
  CHECK(est.size() < corrupted.size());
  nlohmann::json rep = read_json(cfg.output_dir / "report.json");
  CHECK(rep.at("final_size").get<int>() == static_cast<int>(est.size()));
}

TEST_CASE("cmd_sweep: identity cell and byte-identical reruns") {
  ExperimentConfig cfg;
  cfg.dim = 3;
  cfg.n = 60;
  cfg.eps_grid = {0.0};
  cfg.rho_grid = {0.0};
  cfg.k_list = {1, 2};
  cfg.trials = 1;
  cfg.master_seed = 13;
  cfg.sliced_restarts = 3;
  cfg.sliced_steps = 40;
  cfg.output_dir = temp_dir("sweep_a");
  CHECK(cmd_sweep(cfg) == 0);
  std::vector<SweepRow> rows = run_sweep(cfg);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.w1k_filtered_vs_clean <= r.w1k_corrupted_vs_clean + 1e-9);
    CHECK(r.mean_err_naive == doctest::Approx(0.0));
    CHECK(r.removed_count == 0);
  }

  ExperimentConfig cfg2 = cfg;
  cfg2.output_dir = temp_dir("sweep_b");
  CHECK(cmd_sweep(cfg2) == 0);
  CHECK(slurp(cfg.output_dir / "results.csv") == slurp(cfg2.output_dir / "results.csv"));
  CHECK(fs::exists(cfg.output_dir / "results.gp"));
}

TEST_CASE("verify suites all pass and unknown suites are rejected") {
  ExperimentConfig cfg;
  cfg.output_dir = temp_dir("verify_none");  // empty: budgets generates in memory
  cfg.dim = 2;
  cfg.n = 50;
  for (const char* suite :
       {"budgets", "lemma_sandwich", "lemma_decompose", "resilience", "wdro_equiv"}) {
    std::ostringstream log;
    INFO(suite);
    CHECK(cmd_verify(suite, cfg, log) == 0);
  }
  std::ostringstream log;
  CHECK_THROWS(cmd_verify("nope", cfg, log));
}

TEST_CASE("cmd_dro produces a fit within the excess-risk bound") {
  ExperimentConfig cfg;
  cfg.dim = 6;
  cfg.n = 300;
  cfg.eps_grid = {0.05};
  cfg.rho_grid = {0.0};
  cfg.trials = 1;
  cfg.master_seed = 14;
  cfg.output_dir = temp_dir("dro");
  CHECK(cmd_dro(cfg) == 0);
  nlohmann::json fit = read_json(cfg.output_dir / "fit.json");
  CHECK(fit.at("excess_risk").get<double>() <=
        fit.at("excess_risk_bound").get<double>() + 1e-9);
  CHECK(fs::exists(cfg.output_dir / "risk.csv"));
}

#include "robusttransport/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "robusttransport/adversary.hpp"
#include "robusttransport/filter.hpp"
#include "robusttransport/io.hpp"
#include "robusttransport/rng.hpp"
#include "robusttransport/spectral.hpp"
#include "robusttransport/stability.hpp"
#include "robusttransport/transport.hpp"
#include "robusttransport/wdro.hpp"

namespace rtr {

using nlohmann::json;
namespace fs = std::filesystem;

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("distribution")) {
    const json& d = j.at("distribution");
    cfg.dist_kind = d.value("kind", std::string("gaussian"));
    cfg.dim = d.value("dim", cfg.dim);
    cfg.tail_q = d.value("q", cfg.tail_q);
    if (d.contains("path")) cfg.file_path = d.at("path").get<std::string>();
  }
  cfg.n = j.value("n", cfg.n);
  if (j.contains("eps_grid")) cfg.eps_grid = j.at("eps_grid").get<std::vector<double>>();
  if (j.contains("rho_grid")) cfg.rho_grid = j.at("rho_grid").get<std::vector<double>>();
  if (j.contains("k_list")) cfg.k_list = j.at("k_list").get<std::vector<int>>();
  cfg.trials = j.value("trials", cfg.trials);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    cfg.filter_preset = f.value("preset", cfg.filter_preset);
    cfg.custom_sigma = f.value("sigma", cfg.custom_sigma);
    cfg.custom_c = f.value("C", cfg.custom_c);
  }
  if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    cfg.tv_strategy = a.value("tv", cfg.tv_strategy);
    cfg.cluster_distance = a.value("distance", cfg.cluster_distance);
    cfg.w1_strategy = a.value("w1", cfg.w1_strategy);
    cfg.concentrated_fraction = a.value("fraction", cfg.concentrated_fraction);
  }
  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    cfg.eval_subsample = e.value("subsample", cfg.eval_subsample);
    cfg.sliced_restarts = e.value("restarts", cfg.sliced_restarts);
    cfg.sliced_steps = e.value("steps", cfg.sliced_steps);
  }
  if (j.contains("dro")) {
    const json& d = j.at("dro");
    cfg.dro_tau = d.value("tau", cfg.dro_tau);
    if (d.contains("loss")) cfg.dro_loss = d.at("loss");
  }
  cfg.threads = j.value("threads", cfg.threads);

  if (cfg.eps_grid.empty() || cfg.rho_grid.empty())
    throw std::invalid_argument("eps_grid and rho_grid must be nonempty");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.k_list.empty()) {
    for (int k : {1, 2, 5, cfg.dim})
      if (k <= cfg.dim &&
          std::find(cfg.k_list.begin(), cfg.k_list.end(), k) == cfg.k_list.end())
        cfg.k_list.push_back(k);
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  return config_from_json(read_json(path));
}

DiscreteMeasure sample_gaussian(int n, int d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
  return DiscreteMeasure::uniform(std::move(pts));
}

DiscreteMeasure sample_heavy_tail(int n, int d, double q, std::uint64_t seed) {
  if (q <= 2) throw std::invalid_argument("heavy_tail needs q > 2 for unit covariance");
  auto rng = make_rng(seed);
  std::student_t_distribution<double> t(q);
  const double scale = std::sqrt((q - 2.0) / q);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = scale * t(rng);
  return DiscreteMeasure::uniform(std::move(pts));
}

DiscreteMeasure sample_distribution(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.dist_kind == "gaussian") return sample_gaussian(cfg.n, cfg.dim, seed);
  if (cfg.dist_kind == "heavy_tail")
    return sample_heavy_tail(cfg.n, cfg.dim, cfg.tail_q, seed);
  if (cfg.dist_kind == "file") return read_csv(cfg.file_path);
  throw std::invalid_argument("unknown distribution kind '" + cfg.dist_kind + "'");
}

namespace {

Eigen::VectorXd axis_direction(int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v[0] = 1.0;
  return v;
}

TvStrategy make_tv_strategy(const ExperimentConfig& cfg) {
  if (cfg.tv_strategy == "cluster") {
    double dist = cfg.cluster_distance > 0 ? cfg.cluster_distance
                                           : 10.0 * std::sqrt(double(cfg.dim));
    return ClusterStrategy{axis_direction(cfg.dim), dist};
  }
  if (cfg.tv_strategy == "heavy_tail") return HeavyTailStrategy{1.0};
  throw std::invalid_argument("unknown tv strategy '" + cfg.tv_strategy + "'");
}

W1Strategy make_w1_strategy(const ExperimentConfig& cfg) {
  if (cfg.w1_strategy == "uniform_shift")
    return UniformShiftStrategy{axis_direction(cfg.dim)};
  if (cfg.w1_strategy == "concentrated")
    return ConcentratedStrategy{cfg.concentrated_fraction, axis_direction(cfg.dim)};
  throw std::invalid_argument("unknown w1 strategy '" + cfg.w1_strategy + "'");
}

FilterConfig make_filter_config(const ExperimentConfig& cfg, double eps, double rho,
                                std::uint64_t seed) {
  if (cfg.filter_preset == "practical")
    return FilterConfig::practical(eps, rho, seed);
  FilterConfig f;
  f.eps = eps;
  f.rho = rho;
  f.seed = seed;
  if (cfg.filter_preset == "custom") {
    f.sigma = cfg.custom_sigma;
    f.big_c = cfg.custom_c;
  } else if (cfg.filter_preset != "theory") {
    throw std::invalid_argument("unknown filter preset '" + cfg.filter_preset + "'");
  }
  return f;
}

DiscreteMeasure subsample(const DiscreteMeasure& m, int cap, std::uint64_t seed) {
  if (m.size() <= cap) return m;
  auto rng = make_rng(seed);
  std::vector<int> idx(m.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < cap; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(m.size()) - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  Eigen::MatrixXd pts(cap, m.dim());
  for (int r = 0; r < cap; ++r) pts.row(r) = m.points().row(idx[r]);
  return DiscreteMeasure::uniform(std::move(pts));
}

double eval_w1k(const DiscreteMeasure& a, const DiscreteMeasure& b, int k,
                const ExperimentConfig& cfg, std::uint64_t seed) {
  SlicedConfig sc;
  sc.restarts = cfg.sliced_restarts;
  sc.steps = cfg.sliced_steps;
  sc.seed = seed;
  if (k == 1) return max_sliced_w1(a, b, 1, sc).value;
  // exact OT in the projected space is quadratic in n; cap the point count
  DiscreteMeasure as = subsample(a, cfg.eval_subsample, derive_seed(seed, 101));
  DiscreteMeasure bs = subsample(b, cfg.eval_subsample, derive_seed(seed, 102));
  return max_sliced_w1(as, bs, k, sc).value;
}

void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  size_t nt = threads > 0 ? static_cast<size_t>(threads) : (hw ? hw : 4);
  nt = std::min(nt, count);
  if (nt <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (size_t t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Cell {
  int trial;
  size_t ei, ri;
};

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("need matching series of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0)
      throw std::invalid_argument("loglog_slope needs positive data");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(x.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (int t = 0; t < cfg.trials; ++t)
    for (size_t ei = 0; ei < cfg.eps_grid.size(); ++ei)
      for (size_t ri = 0; ri < cfg.rho_grid.size(); ++ri)
        cells.push_back({t, ei, ri});

  std::vector<std::vector<SweepRow>> slots(cells.size());

  parallel_for(cells.size(), cfg.threads, [&](size_t ci) {
    const Cell& cell = cells[ci];
    const double eps = cfg.eps_grid[cell.ei];
    const double rho = cfg.rho_grid[cell.ri];
    const std::uint64_t trial_seed = derive_seed(cfg.master_seed, cell.trial);
    const std::uint64_t cell_seed =
        derive_seed(trial_seed, 1 + cell.ei * cfg.rho_grid.size() + cell.ri);

    DiscreteMeasure clean = sample_distribution(cfg, derive_seed(trial_seed, 0));
    auto [corrupted, plan] =
        combined_corrupt(clean, eps, rho, make_tv_strategy(cfg),
                         make_w1_strategy(cfg), derive_seed(cell_seed, 1));
    auto [filtered, report] = filter_w2(
        corrupted, make_filter_config(cfg, eps, rho, derive_seed(cell_seed, 2)));

    Eigen::VectorXd mu_clean = clean.points().transpose() * clean.weights();
    Eigen::VectorXd mu_naive = corrupted.points().transpose() * corrupted.weights();
    Eigen::VectorXd mu_filt = filtered.points().transpose() * filtered.weights();
    double err_naive = (mu_naive - mu_clean).norm();
    double err_filt = (mu_filt - mu_clean).norm();
    int removed = static_cast<int>(clean.size()) - report.final_size;

    std::vector<SweepRow>& rows = slots[ci];
    for (size_t kidx = 0; kidx < cfg.k_list.size(); ++kidx) {
      int k = cfg.k_list[kidx];
      SweepRow row;
      row.trial = cell.trial;
      row.eps = eps;
      row.rho = rho;
      row.k = k;
      row.seed = cell_seed;
      row.w1k_corrupted_vs_clean =
          eval_w1k(corrupted, clean, k, cfg, derive_seed(cell_seed, 10 + 2 * kidx));
      row.w1k_filtered_vs_clean =
          eval_w1k(filtered, clean, k, cfg, derive_seed(cell_seed, 11 + 2 * kidx));
      row.mean_err_naive = err_naive;
      row.mean_err_filtered = err_filt;
      row.iterations = static_cast<int>(report.iterations.size());
      row.removed_count = removed;
      rows.push_back(row);
    }
  });

  std::vector<SweepRow> out;
  out.reserve(cells.size() * cfg.k_list.size());
  for (auto& slot : slots)
    for (auto& row : slot) out.push_back(row);
  return out;
}

namespace {

void write_results_csv(const fs::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trial,eps,rho,k,seed,w1k_corrupted_vs_clean,w1k_filtered_vs_clean,"
         "mean_err_naive,mean_err_filtered,iterations,removed_count\n";
  for (const auto& r : rows) {
    out << r.trial << ',' << format_double(r.eps) << ',' << format_double(r.rho)
        << ',' << r.k << ',' << r.seed << ','
        << format_double(r.w1k_corrupted_vs_clean) << ','
        << format_double(r.w1k_filtered_vs_clean) << ','
        << format_double(r.mean_err_naive) << ','
        << format_double(r.mean_err_filtered) << ',' << r.iterations << ','
        << r.removed_count << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_plot_script(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# gnuplot script for results.csv produced by `robust-transport sweep`\n"
         "set datafile separator ','\n"
         "set key outside\n"
         "set logscale xy\n"
         "set xlabel 'eps'\n"
         "set ylabel 'W_{1,k} error vs clean empirical measure'\n"
         "plot 'results.csv' every ::1 using 2:6 with points pt 6 title "
         "'corrupted', \\\n"
         "     'results.csv' every ::1 using 2:7 with points pt 7 title "
         "'filtered'\n";
}

fs::path cell_dir(const ExperimentConfig& cfg, int trial, size_t ei, size_t ri) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "trial_%03d/eps%zu_rho%zu", trial, ei, ri);
  return cfg.output_dir / buf;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg) {
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(cfg.master_seed, t);
    DiscreteMeasure clean = sample_distribution(cfg, derive_seed(trial_seed, 0));
    for (size_t ei = 0; ei < cfg.eps_grid.size(); ++ei)
      for (size_t ri = 0; ri < cfg.rho_grid.size(); ++ri) {
        const std::uint64_t cell_seed =
            derive_seed(trial_seed, 1 + ei * cfg.rho_grid.size() + ri);
        auto [corrupted, plan] = combined_corrupt(
            clean, cfg.eps_grid[ei], cfg.rho_grid[ri], make_tv_strategy(cfg),
            make_w1_strategy(cfg), derive_seed(cell_seed, 1));
        fs::path dir = cell_dir(cfg, t, ei, ri);
        fs::create_directories(dir);
        write_csv(dir / "clean.csv", clean);
        write_csv(dir / "corrupted.csv", corrupted);
        write_json(dir / "plan.json", plan_to_json(plan));
      }
  }
  return 0;
}

int cmd_filter(const fs::path& input, const ExperimentConfig& cfg) {
  DiscreteMeasure corrupted = read_csv(input);
  FilterConfig fc = make_filter_config(cfg, cfg.eps_grid.front(),
                                       cfg.rho_grid.front(),
                                       derive_seed(cfg.master_seed, 0));
  auto [filtered, report] = filter_w2(corrupted, fc);
  fs::create_directories(cfg.output_dir);
  write_csv(cfg.output_dir / "estimate.csv", filtered);
  write_json(cfg.output_dir / "report.json", report_to_json(report));
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  std::vector<SweepRow> rows = run_sweep(cfg);
  fs::create_directories(cfg.output_dir);
  write_results_csv(cfg.output_dir / "results.csv", rows);
  write_plot_script(cfg.output_dir / "results.gp");
  return 0;
}

namespace {

struct CheckLog {
  std::ostream& out;
  int failures = 0;

  void check(const std::string& name, bool ok) {
    out << (ok ? "pass" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  }
};

DiscreteMeasure random_measure(int n, int d, std::uint64_t seed, double spread) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, spread);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Eigen::MatrixXd pts(n, d);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) = gauss(rng);
    w[i] = unif(rng);
  }
  return DiscreteMeasure(std::move(pts), std::move(w));
}

int verify_budgets(const ExperimentConfig& cfg, CheckLog& log) {
  std::vector<fs::path> plans;
  if (fs::exists(cfg.output_dir))
    for (const auto& e : fs::recursive_directory_iterator(cfg.output_dir))
      if (e.is_regular_file() && e.path().filename() == "plan.json")
        plans.push_back(e.path());
  std::sort(plans.begin(), plans.end());

  if (plans.empty()) {
    // nothing on disk: certify freshly generated plans over the config grid
    for (size_t ei = 0; ei < cfg.eps_grid.size(); ++ei)
      for (size_t ri = 0; ri < cfg.rho_grid.size(); ++ri) {
        DiscreteMeasure clean =
            sample_distribution(cfg, derive_seed(cfg.master_seed, 0));
        auto [corrupted, plan] = combined_corrupt(
            clean, cfg.eps_grid[ei], cfg.rho_grid[ri], make_tv_strategy(cfg),
            make_w1_strategy(cfg), derive_seed(cfg.master_seed, 1 + ei * 97 + ri));
        bool ok =
            plan.average_displacement() <= plan.rho + 1e-9 &&
            static_cast<double>(plan.tv_indices.size()) <=
                std::floor(plan.eps * double(clean.size())) + 0.5;
        log.check("generated budget eps=" + format_double(plan.eps) +
                      " rho=" + format_double(plan.rho),
                  ok);
      }
    return log.failures;
  }

  for (const fs::path& p : plans) {
    CorruptionPlan plan = plan_from_json(read_json(p));
    DiscreteMeasure clean = read_csv(p.parent_path() / "clean.csv");
    DiscreteMeasure corrupted = read_csv(p.parent_path() / "corrupted.csv");
    bool ok = plan.average_displacement() <= plan.rho + 1e-9;
    ok = ok && static_cast<double>(plan.tv_indices.size()) <=
                   std::floor(plan.eps * double(clean.size())) + 0.5;
    std::vector<char> replaced(clean.size(), 0);
    for (int i : plan.tv_indices) replaced[i] = 1;
    for (Eigen::Index i = 0; i < clean.size() && ok; ++i)
      if (!replaced[i])
        ok = (corrupted.points().row(i) - clean.points().row(i) -
              plan.displacements.row(i))
                 .norm() < 1e-9;
    log.check("plan budgets " + p.parent_path().string(), ok);
  }
  return log.failures;
}

int verify_lemma_sandwich(CheckLog& log) {
  bool all = true;
  for (int r = 0; r < 100; ++r) {
    DiscreteMeasure m = random_measure(200, 10, derive_seed(7001, r), 1.5);
    Eigen::MatrixXd cov = moments(m).covariance;
    double mid = shrink_cost(cov);
    double lower = 0.5 * positive_part_trace(cov, 2.0);
    double upper = positive_part_trace(cov, 1.0);
    all = all && lower <= mid + 1e-8 && mid <= upper + 1e-8;
  }
  log.check("trace-norm sandwich on 100 random covariances", all);
  return log.failures;
}

int verify_lemma_decompose(CheckLog& log) {
  for (double tau : {0.1, 0.3}) {
    bool all = true;
    for (int r = 0; r < 50 && all; ++r) {
      auto rng = make_rng(derive_seed(7100, r * 2 + (tau > 0.2)));
      std::normal_distribution<double> gauss(0.0, 1.0);
      DiscreteMeasure p = random_measure(100, 3, derive_seed(7200, r), 1.0);
      Eigen::MatrixXd shifted = p.points();
      for (Eigen::Index i = 0; i < shifted.rows(); ++i)
        for (Eigen::Index j = 0; j < shifted.cols(); ++j)
          shifted(i, j) += 0.3 * gauss(rng);
      DiscreteMeasure q(shifted, p.weights());
      // identity coupling between matched atoms
      Coupling c;
      double rho = 0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        c.source_idx.push_back(static_cast<int>(i));
        c.target_idx.push_back(static_cast<int>(i));
        c.mass.push_back(p.weights()[i]);
        rho += p.weights()[i] * (shifted.row(i) - p.points().row(i)).norm();
      }
      DiscreteMeasure rmeas = w1_decompose(p, q, c, tau);
      double w1_pr = wp_exact(p, rmeas, 1).value;
      double w2_pr = wp_exact(p, rmeas, 2).value;
      double tv_rq = tv_distance(rmeas, q);
      all = w1_pr <= rho + 1e-8 &&
            w2_pr <= std::sqrt(2.0) * rho / std::sqrt(tau) + 1e-8 &&
            tv_rq <= tau + 1e-8;
    }
    log.check("W1 decomposition inequalities at tau=" + format_double(tau), all);
  }
  return log.failures;
}

int verify_resilience(CheckLog& log) {
  bool identity_ok = true, chain_ok = true;
  for (int r = 0; r < 50; ++r) {
    DiscreteMeasure p = random_measure(20, 1, derive_seed(7300, r), 2.0);
    for (double eps : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      double lhs = mean_resilience_1d(p, 1.0 - eps);
      double rhs = (1.0 - eps) / eps * mean_resilience_1d(p, eps);
      identity_ok = identity_ok && std::abs(lhs - rhs) <= 1e-12 *
                                       std::max(1.0, std::abs(rhs));
    }
    DiscreteMeasure pd = random_measure(20, 3, derive_seed(7400, r), 2.0);
    double tau = mean_resilience(pd, 0.2);
    double tau1 = pth_order_resilience(pd, 0.2, 1);
    double tau2 = pth_order_resilience(pd, 0.2, 2);
    chain_ok = chain_ok && tau <= tau1 + 1e-9 && tau1 <= std::sqrt(tau2) + 1e-9;
  }
  log.check("large-eps resilience identity", identity_ok);
  log.check("resilience monotonicity chain", chain_ok);
  return log.failures;
}

int verify_wdro_equiv(CheckLog& log) {
  bool eq_ok = true, reg_ok = true;
  for (int r = 0; r < 50; ++r) {
    auto rng = make_rng(derive_seed(7500, r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    DiscreteMeasure p = random_measure(40, 4, derive_seed(7600, r), 1.0);

    LossSpec hinge;
    hinge.tag = LossTag::hinge;
    hinge.affine_map = Eigen::MatrixXd(1, 4);
    for (int j = 0; j < 4; ++j) hinge.affine_map(0, j) = gauss(rng);
    hinge.offset = Eigen::VectorXd::Constant(1, gauss(rng));
    hinge.theta = Eigen::VectorXd::Constant(1, gauss(rng));

    LossSpec abs;
    abs.tag = LossTag::absolute_regression;
    abs.affine_map = Eigen::MatrixXd(2, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) abs.affine_map(i, j) = gauss(rng);
    abs.offset = Eigen::VectorXd::Zero(2);
    abs.theta = Eigen::VectorXd::Constant(1, gauss(rng));

    double tau = 0.5 + std::abs(gauss(rng));
    for (const LossSpec& loss : {hinge, abs}) {
      auto [lhs, rhs] = pushforward_equivalence_check(p, loss, tau);
      eq_ok = eq_ok && std::abs(lhs - rhs) <= 1e-6;
      double gap = dro_value_w1(p, loss, tau) - empirical_risk(p, loss);
      reg_ok = reg_ok && std::abs(gap - tau * loss.lip_const()) <= 1e-9;
    }
  }
  log.check("pushforward reduction equality", eq_ok);
  log.check("Lipschitz regularizer identity", reg_ok);
  return log.failures;
}

}  // namespace

int cmd_verify(const std::string& suite, const ExperimentConfig& cfg,
               std::ostream& out) {
  CheckLog log{out};
  if (suite == "budgets")
    verify_budgets(cfg, log);
  else if (suite == "lemma_sandwich")
    verify_lemma_sandwich(log);
  else if (suite == "lemma_decompose")
    verify_lemma_decompose(log);
  else if (suite == "resilience")
    verify_resilience(log);
  else if (suite == "wdro_equiv")
    verify_wdro_equiv(log);
  else
    throw std::invalid_argument(
        "unknown suite '" + suite +
        "' (expected budgets|lemma_sandwich|lemma_decompose|resilience|wdro_equiv)");
  if (log.failures == 0)
    out << "all checks passed\n";
  else
    out << log.failures << " check(s) failed\n";
  return log.failures == 0 ? 0 : 1;
}

namespace {

// weighted L1 line fit min_theta sum w_i |theta*s_i - y_i|; exact by scanning
// the breakpoints y_i/s_i
double l1_line_fit(const Eigen::VectorXd& s, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w) {
  std::vector<double> cand;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (std::abs(s[i]) > 1e-12) cand.push_back(y[i] / s[i]);
  if (cand.empty()) return 0;
  double best = cand.front(), best_obj = std::numeric_limits<double>::infinity();
  for (double theta : cand) {
    double obj = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      obj += w[i] * std::abs(theta * s[i] - y[i]);
    if (obj < best_obj) {
      best_obj = obj;
      best = theta;
    }
  }
  return best;
}

}  // namespace

int cmd_dro(const ExperimentConfig& cfg) {
  const int d = std::max(cfg.dim, 2);
  const std::uint64_t seed = derive_seed(cfg.master_seed, 0);
  const double eps = cfg.eps_grid.front();
  const double rho = cfg.rho_grid.front();

  // synthetic single-feature regression: x = (features, y) in R^d
  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d - 1);
  beta[0] = 1.0;  // response depends on the first feature only
  Eigen::MatrixXd pts(cfg.n, d);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < d - 1; ++j) pts(i, j) = gauss(rng);
    pts(i, d - 1) = beta.dot(pts.row(i).head(d - 1)) + 0.1 * gauss(rng);
  }
  DiscreteMeasure clean = DiscreteMeasure::uniform(std::move(pts));
  auto [corrupted, plan] =
      combined_corrupt(clean, eps, rho, make_tv_strategy(cfg),
                       make_w1_strategy(cfg), derive_seed(seed, 1));

  LossSpec family;
  if (!cfg.dro_loss.is_null() && !cfg.dro_loss.empty()) {
    family = loss_from_json(cfg.dro_loss);
  } else {
    family.tag = LossTag::absolute_regression;
    family.affine_map = Eigen::MatrixXd::Zero(2, d);
    family.affine_map.block(0, 0, 1, d - 1) = beta.transpose();  // feature score
    family.affine_map(1, d - 1) = 1.0;                           // response
    family.offset = Eigen::VectorXd::Zero(2);
    family.theta = Eigen::VectorXd::Zero(1);
  }

  double tau = cfg.dro_tau;
  if (tau < 0) {
    SlicedConfig sc;
    sc.restarts = cfg.sliced_restarts;
    sc.steps = cfg.sliced_steps;
    sc.seed = derive_seed(seed, 3);
    auto [pre_filtered, pre_report] =
        filter_w2(corrupted, make_filter_config(cfg, eps, rho, derive_seed(seed, 2)));
    tau = max_sliced_w1(pre_filtered, clean, 1, sc).value + std::sqrt(eps);
  }

  FitConfig fit_cfg;
  fit_cfg.seed = derive_seed(seed, 2);
  FitResult fit = or_wdro_fit(corrupted, eps, rho, family, tau, fit_cfg);

  // family oracle on the clean evaluation measure
  LossSpec oracle = family;
  if (oracle.tag == LossTag::absolute_regression && oracle.theta.size() == 1) {
    Eigen::MatrixXd z = (clean.points() * oracle.affine_map.transpose()).rowwise() +
                        oracle.offset.transpose();
    oracle.theta[0] = l1_line_fit(z.col(0), z.col(1), clean.weights());
  } else {
    FitConfig oc;
    oc.seed = derive_seed(seed, 4);
    oracle = or_wdro_fit(clean, 0.0, 0.0, oracle, 0.0, oc).loss;
  }

  double excess = excess_risk(fit.loss, oracle, clean);
  double bound = 2.0 * oracle.lip_const() * tau;

  fs::create_directories(cfg.output_dir);
  json fit_json = loss_to_json(fit.loss);
  fit_json["tau"] = tau;
  fit_json["objective"] = fit.objective;
  fit_json["converged"] = fit.converged;
  fit_json["iterations"] = fit.iterations;
  fit_json["excess_risk"] = excess;
  fit_json["excess_risk_bound"] = bound;
  write_json(cfg.output_dir / "fit.json", fit_json);

  std::ofstream risk(cfg.output_dir / "risk.csv");
  if (!risk) throw std::runtime_error("cannot write risk.csv");
  risk << "eps,rho,tau,excess_risk,bound,within_bound\n";
  risk << format_double(eps) << ',' << format_double(rho) << ','
       << format_double(tau) << ',' << format_double(excess) << ','
       << format_double(bound) << ',' << (excess <= bound ? 1 : 0) << "\n";
  return 0;
}

}  // namespace rtr

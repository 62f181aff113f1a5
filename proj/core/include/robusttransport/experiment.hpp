#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "robusttransport/measures.hpp"

namespace rtr {

struct ExperimentConfig {
  // distribution: gaussian | heavy_tail | file
  std::string dist_kind = "gaussian";
  int dim = 2;
  double tail_q = 4.0;  // heavy_tail degrees of freedom (q > 2)
  std::filesystem::path file_path;

  int n = 500;
  std::vector<double> eps_grid{0.05};
  std::vector<double> rho_grid{0.0};
  std::vector<int> k_list;  // empty -> {1, 2, 5, d} clipped to dim
  int trials = 1;
  std::uint64_t master_seed = 0;

  // filter: theory | practical | custom
  std::string filter_preset = "practical";
  double custom_sigma = 2.0;
  double custom_c = 20.0;

  std::filesystem::path output_dir = "out";

  // adversary
  std::string tv_strategy = "cluster";  // cluster | heavy_tail
  double cluster_distance = 0;          // 0 -> 10*sqrt(d)
  std::string w1_strategy = "uniform_shift";  // uniform_shift | concentrated
  double concentrated_fraction = 0.1;

  // evaluation of max-sliced distances
  int eval_subsample = 600;  // cap on points entering k >= 2 exact OT
  int sliced_restarts = 8;
  int sliced_steps = 120;

  // dro pipeline
  double dro_tau = -1;  // < 0 -> derived from measured W_{1,1} + sqrt(eps)
  nlohmann::json dro_loss;  // optional LossSpec json; empty -> built-in regression

  int threads = 0;  // 0 -> hardware concurrency
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

DiscreteMeasure sample_gaussian(int n, int d, std::uint64_t seed);
// Student-t with q dof per coordinate, scaled by sqrt((q-2)/q) to unit
// covariance; requires q > 2.
DiscreteMeasure sample_heavy_tail(int n, int d, double q, std::uint64_t seed);
DiscreteMeasure sample_distribution(const ExperimentConfig& cfg, std::uint64_t seed);

struct SweepRow {
  int trial = 0;
  double eps = 0;
  double rho = 0;
  int k = 0;
  std::uint64_t seed = 0;  // derived trial seed; rows re-derivable from it
  double w1k_corrupted_vs_clean = 0;
  double w1k_filtered_vs_clean = 0;
  double mean_err_naive = 0;
  double mean_err_filtered = 0;
  int iterations = 0;
  int removed_count = 0;
};

// Deterministic given cfg: trials run on a pool but rows land in grid order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

int cmd_simulate(const ExperimentConfig& cfg);
int cmd_filter(const std::filesystem::path& input, const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
// suite in {budgets, lemma_sandwich, lemma_decompose, resilience, wdro_equiv};
// prints one line per check, returns 0 iff all pass.
int cmd_verify(const std::string& suite, const ExperimentConfig& cfg, std::ostream& out);
int cmd_dro(const ExperimentConfig& cfg);

// Least-squares slope of log(y) against log(x); used for scaling-law checks.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rtr

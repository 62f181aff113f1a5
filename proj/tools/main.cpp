#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "robusttransport/experiment.hpp"
#include "robusttransport/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"robust distribution learning under combined TV/Wasserstein corruption"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  auto add_common = [&](CLI::App* sub, bool config_required = true) {
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required(config_required);
    sub->add_option("--seed", seed_override, "override master_seed");
    sub->add_option("--out", out_override, "override output directory");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate clean/corrupted datasets");
  add_common(simulate);

  CLI::App* filter = app.add_subcommand("filter", "filter a corrupted CSV dataset");
  add_common(filter);
  std::string input_path;
  filter->add_option("--input", input_path, "corrupted dataset CSV")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "run the evaluation sweep");
  add_common(sweep);

  CLI::App* verify = app.add_subcommand("verify", "run a named property suite");
  add_common(verify, false);
  std::string suite;
  verify
      ->add_option("--suite", suite,
                   "budgets|lemma_sandwich|lemma_decompose|resilience|wdro_equiv")
      ->required();

  CLI::App* dro = app.add_subcommand("dro", "filter-then-DRO regression pipeline");
  add_common(dro);

  CLI11_PARSE(app, argc, argv);

  try {
    rtr::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = rtr::load_config(config_path);
    if (seed_override) cfg.master_seed = *seed_override;
    if (out_override) cfg.output_dir = *out_override;

    if (simulate->parsed()) return rtr::cmd_simulate(cfg);
    if (filter->parsed()) return rtr::cmd_filter(input_path, cfg);
    if (sweep->parsed()) return rtr::cmd_sweep(cfg);
    if (verify->parsed()) return rtr::cmd_verify(suite, cfg, std::cout);
    if (dro->parsed()) return rtr::cmd_dro(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

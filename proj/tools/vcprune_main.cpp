#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcprune/commands.hpp"

namespace {

vcprune::RunConfig load_with_overrides(const std::string &config_path,
                                       const std::string &out_override,
                                       const std::string &precision_override,
                                       const std::optional<std::uint64_t> &seed_override) {
  vcprune::RunConfig rc = vcprune::load_run_config(config_path);
  if (!out_override.empty()) rc.output_dir = out_override;
  if (!precision_override.empty())
    rc.precision = vcprune::precision_from_string(precision_override);
  if (seed_override) rc.seed = *seed_override;
  return rc;
}

std::vector<int> parse_nv_list(const std::string &csv) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma == std::string::npos ? csv.npos : comma - pos);
    out.push_back(std::stoi(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"mixed-modality transformer with visual-computation pruning: forward runs, "
               "attention analysis, flops model, sweeps and budget search"};
  app.require_subcommand(1);

  std::string config_path, out_dir, precision;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "run config JSON file")->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--precision", precision, "single or double (overrides config)");
  std::uint64_t seed_value = 0;
  auto *seed_opt = app.add_option("--seed", seed_value, "RNG seed (overrides config)");

  auto *fwd = app.add_subcommand("forward", "run the model, write hidden-state summary");
  bool capture = false;
  fwd->add_flag("--capture", capture, "also write attention records and a distance profile");

  auto *analyze = app.add_subcommand("analyze", "attention redundancy diagnostics");
  int tokens = 10, bins = 16;
  analyze->add_option("--tokens", tokens, "number of seeded query tokens (default 10)");
  analyze->add_option("--bins", bins, "distance bins (default 16)");
  fwd->add_option("--bins", bins, "distance bins for the capture profile (default 16)");

  auto *flops_cmd = app.add_subcommand("flops", "dense and pruned cost reports");

  auto *sweep = app.add_subcommand("sweep", "cost totals over visual-token counts");
  std::string nv_csv;
  int workers = 1;
  sweep->add_option("--nv", nv_csv, "comma-separated visual token counts")->required();
  sweep->add_option("--workers", workers, "worker pool size (default 1)");

  auto *solve = app.add_subcommand("solve", "exhaustive budget search");
  double target = 0.0;
  solve->add_option("--target-flops", target, "flops budget")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto rc = load_with_overrides(
        config_path, out_dir, precision,
        seed_opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt);
    if (fwd->parsed()) return vcprune::cmd_forward(rc, capture, bins);
    if (analyze->parsed()) return vcprune::cmd_analyze(rc, tokens, bins);
    if (flops_cmd->parsed()) return vcprune::cmd_flops(rc);
    if (sweep->parsed()) return vcprune::cmd_sweep(rc, parse_nv_list(nv_csv), workers);
    if (solve->parsed()) return vcprune::cmd_solve(rc, target);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

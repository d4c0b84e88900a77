#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agenet/config_io.hpp"
#include "agenet/convergence.hpp"
#include "agenet/coupling.hpp"
#include "agenet/engine.hpp"
#include "agenet/errors.hpp"
#include "agenet/pde.hpp"

namespace fs = std::filesystem;
using namespace agenet;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_simulate(const CommonOpts& opts, std::optional<std::size_t> snapshot_grid) {
  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json root = load_json_file(opts.config_path);
  NetworkConfig cfg = parse_network_config(root);
  if (opts.seed) cfg.seed = *opts.seed;
  if (snapshot_grid) cfg.snapshot_grid = *snapshot_grid;
  cfg.validate();

  Simulator sim(cfg);
  SimResult result = sim.simulate();

  fs::path out = prepare_out(opts.out_dir);
  write_snapshots_csv(out / "snapshots.csv", result.snapshots);
  write_events_csv(out / "events.csv", result.log);

  ManifestBuilder manifest("agenet simulate", cfg.seed, echo_network_config(cfg));
  manifest.add_output(out / "snapshots.csv");
  manifest.add_output(out / "events.csv");
  manifest.add_stat("spikes", result.spike_count);
  manifest.add_stat("arrivals", result.arrival_count);
  manifest.add_stat("dropped_arrivals", result.dropped_arrivals);
  manifest.add_stat("proposals", result.proposal_count);
  manifest.add_stat("max_mean_rate_sq", result.max_mean_rate_sq);
  manifest.add_stat("moment_cap_exceeded", result.moment_cap_exceeded);
  manifest.write(out / "manifest.json", seconds_since(t0));

  std::cout << "simulate: " << result.spike_count << " spikes, " << result.arrival_count
            << " arrivals (" << result.dropped_arrivals << " dropped) -> " << out.string()
            << "\n";
  return 0;
}

int cmd_meanfield(const CommonOpts& opts, bool emit_density) {
  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json root = load_json_file(opts.config_path);
  MeanFieldConfig cfg = parse_meanfield_config(root);
  fs::path out = prepare_out(opts.out_dir);

  MeanFieldSolution sol;
  try {
    sol = picard_solve(cfg);
  } catch (const PicardError& e) {
    fs::path res_file = out / "picard_residuals.csv";
    std::ofstream rf(res_file);
    rf << "iteration,residual\n";
    for (std::size_t i = 0; i < e.residuals.size(); ++i)
      rf << i << ',' << fmt_double(e.residuals[i]) << '\n';
    std::cerr << "error: " << e.what() << "\nresidual history written to " << res_file.string()
              << "\n";
    return 1;
  }

  write_meanfield_csv(out / "meanfield.csv", sol);
  ManifestBuilder manifest("agenet meanfield", 0,
                           nlohmann::json{{"network", echo_network_config(parse_network_config(root))},
                                          {"pde", echo_meanfield_config(cfg)}});
  manifest.add_output(out / "meanfield.csv");
  if (emit_density) {
    write_density_csv(out / "density.csv", sol);
    manifest.add_output(out / "density.csv");
  }
  manifest.add_stat("picard_iterations", sol.picard_residuals.size());
  manifest.add_stat("picard_residuals", sol.picard_residuals);
  manifest.add_stat("grid", nlohmann::json{{"dx", sol.dx},
                                           {"dt", sol.dt},
                                           {"x_max", sol.x_max},
                                           {"cells", sol.cells},
                                           {"time_steps", sol.times.size() - 1}});
  manifest.write(out / "manifest.json", seconds_since(t0));

  std::cout << "meanfield: " << sol.picard_residuals.size() << " sweeps, final residual "
            << (sol.picard_residuals.empty() ? 0.0 : sol.picard_residuals.back()) << " -> "
            << out.string() << "\n";
  return 0;
}

int cmd_chaos(const CommonOpts& opts, const std::vector<std::size_t>& n_list_override,
              std::optional<std::size_t> replicas_override, std::optional<std::size_t> threads,
              bool emit_replicas) {
  auto t0 = std::chrono::steady_clock::now();
  nlohmann::json root = load_json_file(opts.config_path);
  StudyConfig cfg = parse_study_config(root);
  if (opts.seed) cfg.base.seed = *opts.seed;
  if (!n_list_override.empty()) cfg.n_list = n_list_override;
  if (replicas_override) {
    cfg.replicas_small = *replicas_override;
    cfg.replicas_large = *replicas_override;
  }
  if (threads) cfg.threads = *threads;
  cfg.keep_replica_stats = emit_replicas;

  ConvergenceReport report = run_convergence_study(cfg);

  fs::path out = prepare_out(opts.out_dir);
  write_report_csv(out / "report.csv", report);
  {
    std::ofstream jf(out / "report.json", std::ios::binary);
    jf << report_to_json(report).dump(2) << '\n';
  }
  ManifestBuilder manifest("agenet chaos", cfg.base.seed, echo_study_config(cfg));
  manifest.add_output(out / "report.csv");
  manifest.add_output(out / "report.json");
  for (const auto& series : report.replica_series) {
    fs::path p = out / ("replica_n" + std::to_string(series.n) + "_r" +
                        std::to_string(series.replica) + ".csv");
    write_coupling_csv(p, series.stats);
    manifest.add_output(p);
  }
  manifest.write(out / "manifest.json", seconds_since(t0));

  std::cout << "chaos study (" << report.rows.size() << " sizes):\n";
  for (const auto& r : report.rows)
    std::cout << "  N=" << r.n << "  coupling " << r.mean_coupling << " +- " << r.se_coupling
              << "  w1 " << r.mean_w1 << "  w1_mf " << r.mean_w1_mf << "\n";
  if (report.fit)
    std::cout << "  log-log slope " << report.fit->slope << " +- " << report.fit->slope_stderr
              << " (column " << report.fit->column << ")\n";
  return 0;
}

int cmd_validate(const CommonOpts& opts) {
  nlohmann::json root = load_json_file(opts.config_path);
  NetworkConfig net = parse_network_config(root);
  GridSpec grid = parse_validate_grid(root);
  std::vector<double> deltas = parse_validate_deltas(root);

  HypothesisReport rep = check_hypotheses(net.intensity, grid, deltas);
  std::cout << rep.describe();
  if (!rep.mandatory_pass()) {
    std::cerr << "validate: mandatory hypothesis checks FAILED\n";
    return 1;
  }
  std::cout << "validate: all mandatory checks pass\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"age-structured spiking network: simulation, mean-field solve, convergence study"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::optional<std::size_t> snapshot_grid, replicas, threads;
  std::vector<std::size_t> n_list;
  bool emit_density = false;
  bool emit_replicas = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON configuration file")->required();
    sub->add_option("--out", opts.out_dir, "output directory (default: out)");
    sub->add_option("--seed", opts.seed, "override the master seed");
  };

  CLI::App* sim = app.add_subcommand("simulate", "run one finite-network replica");
  add_common(sim);
  sim->add_option("--snapshot-grid", snapshot_grid, "snapshot intervals over the horizon");

  CLI::App* mf = app.add_subcommand("meanfield", "solve the mean-field limit");
  add_common(mf);
  mf->add_flag("--emit-density", emit_density, "write the full density matrix");

  CLI::App* ch = app.add_subcommand("chaos", "run the convergence study");
  add_common(ch);
  ch->add_option("--n-list", n_list, "system sizes (overrides config)");
  ch->add_option("--replicas", replicas, "replicas per size (overrides config)");
  ch->add_option("--threads", threads, "worker threads (0 = hardware)");
  ch->add_flag("--emit-replicas", emit_replicas, "write each replica's coupling time series");

  CLI::App* val = app.add_subcommand("validate", "grid-check the intensity hypotheses");
  add_common(val);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(opts, snapshot_grid);
    if (mf->parsed()) return cmd_meanfield(opts, emit_density);
    if (ch->parsed()) return cmd_chaos(opts, n_list, replicas, threads, emit_replicas);
    if (val->parsed()) return cmd_validate(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

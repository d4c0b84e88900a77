#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "agenet/coupling.hpp"
#include "agenet/engine.hpp"
#include "agenet/pde.hpp"

namespace agenet {

/// Parameters of one convergence study across system sizes.
struct StudyConfig {
  NetworkConfig base;          // n_neurons is overridden per study row
  MeanFieldConfig meanfield;   // grid parameters; physics copied from base
  std::vector<std::size_t> n_list;  // strictly increasing, >= 2 entries
  std::size_t replicas_small = 20;  // for N <= replica_threshold
  std::size_t replicas_large = 10;
  std::size_t replica_threshold = 800;
  double eval_time = 1.0;      // distances evaluated at this time
  std::size_t threads = 0;     // 0 -> hardware concurrency
  bool keep_replica_stats = false;  // retain each replica's time series

  std::size_t replicas_for(std::size_t n) const {
    return n <= replica_threshold ? replicas_small : replicas_large;
  }
};

struct StudyRow {
  std::size_t n = 0;
  std::size_t replicas = 0;
  double mean_coupling = 0.0, se_coupling = 0.0;
  // W1 between the particle empirical measure and the coupled copies.
  double mean_w1 = 0.0, se_w1 = 0.0;
  // W1 between the particle empirical measure and an independent sample of
  // the mean-field law (positive even when the coupling is degenerate).
  double mean_w1_mf = 0.0, se_w1_mf = 0.0;
};

struct RateFit {
  double slope = 0.0, slope_stderr = 0.0, intercept = 0.0, residual_rms = 0.0;
  double scaled_coeff = 0.0, scaled_residual_rms = 0.0;  // D ~ c log(1+N)/sqrt(N)
  std::string column;  // which statistic was fitted
};

struct ConvergenceReport {
  std::vector<std::size_t> n_list;
  std::vector<StudyRow> rows;
  std::optional<RateFit> fit;
  std::uint64_t master_seed = 0;
  double eval_time = 0.0;

  struct ReplicaSeries {
    std::size_t n = 0, replica = 0;
    std::vector<CouplingStats> stats;
  };
  std::vector<ReplicaSeries> replica_series;  // filled when keep_replica_stats
};

/// Simple least-squares helpers used by fit_rate (exposed for tests).
struct LineFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0, residual_rms = 0.0;
};
LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

/// Fit log D vs log N and the scaled model D = c log(1+N)/sqrt(N). Falls back
/// to the independent-sample W1 column when a coupling mean is not positive.
RateFit fit_rate(const ConvergenceReport& report);

/// Run `replicas` coupled replicas per system size, evaluate the coupling
/// distance and both W1 statistics at eval_time, and aggregate mean/stderr.
/// Replicas run concurrently; the reduce order is fixed by (N, replica), so
/// the report is byte-stable under any thread count. A replica failure aborts
/// the study naming the (N, replica) pair.
ConvergenceReport run_convergence_study(const StudyConfig& cfg);

}  // namespace agenet

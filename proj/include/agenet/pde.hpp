#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "agenet/delays.hpp"
#include "agenet/errors.hpp"
#include "agenet/intensity.hpp"
#include "agenet/laws.hpp"
#include "agenet/rng.hpp"

namespace agenet {

/// Picard failure; carries the residual history for diagnostics.
struct PicardError : SimulationError {
  PicardError(const std::string& msg, std::vector<double> res)
      : SimulationError(msg), residuals(std::move(res)) {}
  std::vector<double> residuals;
};

/// Grid and iteration parameters of the mean-field solve.
struct MeanFieldConfig {
  double alpha = 1.0;
  double epsilon = 0.0;
  double horizon = 1.0;
  double m0 = 0.0;  // deterministic initial activity
  InitialLaw g0 = InitialLaw::dirac(0.0);
  IntensityModel intensity = IntensityModel::pure_power(1.0);
  DelayModel delay = DelayModel::dirac(0.0);

  double dx = 1e-3;
  double dt = 1e-3;           // must satisfy dt <= dx (unit transport speed)
  double x_max = 0.0;         // 0 -> sup(g0) + horizon + 5
  double picard_tol = 1e-9;   // sup-norm stop on the activity path
  std::size_t max_iters = 200;
  double damping = 1.0;       // fraction of the update applied per sweep
  bool instantaneous_decay = false;  // alpha -> infinity limit: M = eps (b*r)
  std::size_t density_stride = 0;    // keep every k-th density row; 0 -> ~100 rows

  double resolved_x_max() const;
  void validate() const;
};

/// Converged solution: density rows on the age grid (cell centers), activity
/// and boundary flux per time node, and the Picard residual history.
struct MeanFieldSolution {
  double dx = 0.0, dt = 0.0;
  double x_max = 0.0, horizon = 0.0;
  double alpha = 0.0, epsilon = 0.0, m0 = 0.0;

  std::size_t cells = 0;
  std::vector<double> times;          // 0..horizon, step dt
  std::vector<double> activity;       // M(t) per time node
  std::vector<double> boundary_flux;  // r(t) = integral of a(x, M(t)) f(t,x) dx
  std::vector<double> delay_forcing;  // g(t) = (b * r)(t)
  std::vector<double> final_density;  // f(horizon, .) at cell centers

  std::size_t density_stride = 1;
  std::vector<std::size_t> density_rows;      // time indices of stored rows
  std::vector<std::vector<double>> density;   // stored rows, f at cell centers

  std::vector<double> picard_residuals;

  double cell_center(std::size_t j) const { return dx * (static_cast<double>(j) + 0.5); }
  /// Linear interpolation of M(t) between time nodes.
  double activity_at(double t) const;
  /// Upper bound of M on [t0, t1] (max over covering nodes and endpoints).
  double activity_max_on(double t0, double t1) const;
  double forcing_at(double t) const;
  double forcing_max_on(double t0, double t1) const;
  /// Exponential-integrator contribution of the forcing over [t0, s]:
  /// integral of e^{-alpha (s-u)} alpha g(u) du, stepping over grid nodes.
  double forcing_integral(double t0, double s) const;

  /// Inverse-CDF draw of n i.i.d. ages from the final density row.
  std::vector<double> sample_final_ages(std::size_t n, RngStream& rng) const;
};

/// One upwind transport step with exact exponential absorption; the absorbed
/// mass re-enters at age zero, so total mass is conserved up to the outflow
/// past x_max. Returns the next density row (cell-center values).
struct TransportStepResult {
  std::vector<double> density;
  double absorbed_mass = 0.0;
  double tail_outflow = 0.0;
};
TransportStepResult transport_step(const std::vector<double>& density, double activity,
                                   double dt, double dx, const IntensityModel& model);

/// Picard iteration on the activity path: transport with a(x, M^k) ->
/// boundary flux -> delay convolution -> exponential integration of
/// dM/dt = -alpha M + alpha eps (b*r). Throws SimulationError with the
/// residual history when max_iters is hit.
MeanFieldSolution picard_solve(const MeanFieldConfig& cfg);

/// Per-atom mixture solve for a finitely-supported initial activity law:
/// one deterministic solve per atom value.
std::vector<MeanFieldSolution> picard_solve_atoms(const MeanFieldConfig& cfg,
                                                  const std::vector<double>& m0_atoms);

/// Stationary renewal profile f(x) proportional to exp(-int_0^x a(u) du) for
/// an activity-independent rate, normalized on the grid. Errors when the
/// profile is not normalizable on [0, x_max] (estimated tail mass > 1e-6).
std::vector<double> stationary_profile(const IntensityModel& model, double x_max, double dx);

}  // namespace agenet

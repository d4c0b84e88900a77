#include "agenet/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "agenet/errors.hpp"

namespace agenet {

double MeanFieldConfig::resolved_x_max() const {
  if (x_max > 0.0) return x_max;
  return g0.upper_bound() + horizon + 5.0;
}

void MeanFieldConfig::validate() const {
  if (!(alpha > 0.0) && !instantaneous_decay)
    throw ConfigError("meanfield: alpha must be > 0");
  if (!(epsilon >= 0.0)) throw ConfigError("meanfield: epsilon must be >= 0");
  if (!(horizon > 0.0)) throw ConfigError("meanfield: horizon must be > 0");
  if (!(m0 >= 0.0)) throw ConfigError("meanfield: m0 must be >= 0");
  if (!(dx > 0.0) || !(dt > 0.0)) throw ConfigError("meanfield: dx and dt must be > 0");
  if (dt > dx * (1.0 + 1e-12))
    throw ConfigError("meanfield: CFL violation, need dt <= dx (unit transport speed)");
  if (!(damping > 0.0 && damping <= 1.0))
    throw ConfigError("meanfield: damping must lie in (0, 1]");
  if (max_iters < 1) throw ConfigError("meanfield: max_iters must be >= 1");
  if (!g0.grid_representable())
    throw ConfigError("meanfield: g0 must be grid-representable (dirac/uniform/power_exp_tail)");
  if (g0.upper_bound() > resolved_x_max())
    throw ConfigError("meanfield: g0 support exceeds x_max");
}

namespace {

struct MassStepOut {
  double absorbed = 0.0;
  double tail_outflow = 0.0;
};

// Shared arithmetic of one step on the mass vector: upwind shift, survival
// multiply, re-injection of the absorbed mass into cell 0.
MassStepOut advect_absorb(std::vector<double>& m, const std::vector<double>& keep, double nu,
                          std::vector<double>& scratch) {
  const std::size_t n = m.size();
  MassStepOut out;
  out.tail_outflow = nu * m[n - 1];
  scratch.resize(n);
  scratch[0] = (1.0 - nu) * m[0];
  for (std::size_t j = 1; j < n; ++j) scratch[j] = (1.0 - nu) * m[j] + nu * m[j - 1];
  double absorbed = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double lost = scratch[j] * (1.0 - keep[j]);
    absorbed += lost;
    scratch[j] -= lost;
  }
  scratch[0] += absorbed;  // renewal boundary
  out.absorbed = absorbed;
  m.swap(scratch);
  return out;
}

// Survival factor per destination cell: rate at the midpoint of the segment
// traversed during the step.
void survival_factors(std::vector<double>& keep, double activity, double dt, double dx,
                      const IntensityModel& model) {
  for (std::size_t j = 0; j < keep.size(); ++j) {
    double x_mid = std::max(dx * (static_cast<double>(j) + 0.5) - 0.5 * dt, 0.0);
    keep[j] = std::exp(-model.eval(x_mid, activity) * dt);
  }
}

}  // namespace

TransportStepResult transport_step(const std::vector<double>& density, double activity,
                                   double dt, double dx, const IntensityModel& model) {
  if (dt > dx * (1.0 + 1e-12))
    throw ConfigError("transport_step: CFL violation, need dt <= dx");
  const std::size_t n = density.size();
  const double nu = dt / dx;

  std::vector<double> m(n);
  for (std::size_t j = 0; j < n; ++j) m[j] = density[j] * dx;
  std::vector<double> keep(n), scratch;
  survival_factors(keep, activity, dt, dx, model);
  MassStepOut step = advect_absorb(m, keep, nu, scratch);

  TransportStepResult out;
  out.absorbed_mass = step.absorbed;
  out.tail_outflow = step.tail_outflow;
  out.density.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.density[j] = m[j] / dx;
  return out;
}

namespace {

double flux_quadrature_masses(const std::vector<double>& masses, double activity, double dx,
                              const IntensityModel& model) {
  // Trapezoid over the cell-center samples (masses = density * dx).
  const std::size_t n = masses.size();
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double x = dx * (static_cast<double>(j) + 0.5);
    double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    s += w * model.eval(x, activity) * masses[j];
  }
  return s;
}

double lerp_path(const std::vector<double>& v, double dt, double t) {
  if (t <= 0.0) return v.front();
  double idx = t / dt;
  std::size_t lo = static_cast<std::size_t>(idx);
  if (lo >= v.size() - 1) return v.back();
  double frac = idx - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

double max_on_path(const std::vector<double>& v, double dt, double t0, double t1) {
  double m = std::max(lerp_path(v, dt, t0), lerp_path(v, dt, t1));
  std::size_t lo = static_cast<std::size_t>(std::ceil(t0 / dt));
  std::size_t hi_idx = t1 / dt >= static_cast<double>(v.size() - 1)
                           ? v.size() - 1
                           : static_cast<std::size_t>(std::floor(t1 / dt));
  for (std::size_t k = lo; k <= hi_idx && k < v.size(); ++k) m = std::max(m, v[k]);
  return m;
}

/// Discrete delay convolution g(t_n) = int_0^{t_n} r(t_n - w) b(dw).
std::vector<double> delay_convolution(const std::vector<double>& flux, double dt,
                                      const DelayModel& delay) {
  const std::size_t n = flux.size();
  std::vector<double> g(n, 0.0);
  if (delay.is_atom()) {
    double tau = delay.support_bound();
    for (std::size_t k = 0; k < n; ++k) {
      double t = dt * static_cast<double>(k) - tau;
      if (t < 0.0) continue;  // nothing has arrived yet
      g[k] = lerp_path(flux, dt, t);
    }
    return g;
  }
  // Truncated exponential: trapezoid in the delay variable.
  std::size_t kmax = static_cast<std::size_t>(std::ceil(delay.support_bound() / dt));
  std::vector<double> w(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    double s = std::min(dt * static_cast<double>(k), delay.support_bound());
    w[k] = delay.density(s) * ((k == 0 || k == kmax) ? 0.5 : 1.0) * dt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k <= kmax && k <= i; ++k) acc += w[k] * flux[i - k];
    g[i] = acc;
  }
  return g;
}

struct SweepOutput {
  std::vector<double> flux;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_indices;
  std::vector<double> final_row;
};

SweepOutput transport_sweep(const MeanFieldConfig& cfg, const std::vector<double>& m_path,
                            double dx, double dt, std::size_t cells, std::size_t steps,
                            std::size_t stride, bool keep_rows) {
  SweepOutput out;
  std::vector<double> masses = cfg.g0.cell_masses(dx, cells);
  const double nu = dt / dx;

  auto density_row = [&](const std::vector<double>& m) {
    std::vector<double> f(cells);
    for (std::size_t j = 0; j < cells; ++j) f[j] = m[j] / dx;
    return f;
  };

  // Activity-independent rates keep the same survival factors all sweep.
  const bool cacheable = cfg.intensity.activity_independent();
  std::vector<double> keep(cells), scratch;
  if (cacheable) survival_factors(keep, 0.0, dt, dx, cfg.intensity);

  out.flux.resize(steps + 1);
  out.flux[0] = flux_quadrature_masses(masses, m_path[0], dx, cfg.intensity);
  if (keep_rows) {
    out.rows.push_back(density_row(masses));
    out.row_indices.push_back(0);
  }
  for (std::size_t nstep = 0; nstep < steps; ++nstep) {
    if (!cacheable) {
      double m_mid = 0.5 * (m_path[nstep] + m_path[nstep + 1]);
      survival_factors(keep, m_mid, dt, dx, cfg.intensity);
    }
    advect_absorb(masses, keep, nu, scratch);
    out.flux[nstep + 1] = flux_quadrature_masses(masses, m_path[nstep + 1], dx, cfg.intensity);
    if (keep_rows && ((nstep + 1) % stride == 0 || nstep + 1 == steps)) {
      out.rows.push_back(density_row(masses));
      out.row_indices.push_back(nstep + 1);
    }
  }
  out.final_row = density_row(masses);
  return out;
}

std::vector<double> integrate_activity(const MeanFieldConfig& cfg,
                                       const std::vector<double>& forcing, double dt,
                                       std::size_t steps) {
  std::vector<double> m(steps + 1);
  if (cfg.instantaneous_decay) {
    for (std::size_t k = 0; k <= steps; ++k) m[k] = cfg.epsilon * forcing[k];
    return m;
  }
  const double decay = std::exp(-cfg.alpha * dt);
  m[0] = cfg.m0;
  for (std::size_t k = 0; k < steps; ++k)
    m[k + 1] = m[k] * decay + cfg.epsilon * 0.5 * (forcing[k] + forcing[k + 1]) * (1.0 - decay);
  return m;
}

}  // namespace

MeanFieldSolution picard_solve(const MeanFieldConfig& cfg) {
  cfg.validate();

  // Snap the grid so that the horizon and x_max are whole numbers of steps.
  const std::size_t steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
  const double dt = cfg.horizon / static_cast<double>(steps);
  const double x_hi = cfg.resolved_x_max();
  const std::size_t cells = static_cast<std::size_t>(std::ceil(x_hi / cfg.dx - 1e-9));
  const double dx = cfg.dx;
  if (dt > dx * (1.0 + 1e-12))
    throw ConfigError("meanfield: CFL violation after grid snapping, need dt <= dx");
  const std::size_t stride =
      cfg.density_stride > 0 ? cfg.density_stride : std::max<std::size_t>(1, steps / 100);

  // Zero-forcing start: with epsilon = 0 the first sweep reproduces this
  // path bit-for-bit and the iteration stops after one pass.
  std::vector<double> m_path = integrate_activity(cfg, std::vector<double>(steps + 1, 0.0), dt, steps);

  std::vector<double> residuals;
  bool converged = false;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    SweepOutput sweep = transport_sweep(cfg, m_path, dx, dt, cells, steps, stride, false);
    std::vector<double> forcing = delay_convolution(sweep.flux, dt, cfg.delay);
    std::vector<double> m_new = integrate_activity(cfg, forcing, dt, steps);

    double res = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) res = std::max(res, std::abs(m_new[k] - m_path[k]));
    residuals.push_back(res);

    for (std::size_t k = 0; k <= steps; ++k)
      m_path[k] += cfg.damping * (m_new[k] - m_path[k]);
    if (res < cfg.picard_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "meanfield: Picard iteration did not reach tol " << cfg.picard_tol << " in "
       << cfg.max_iters << " sweeps; residuals:";
    for (double r : residuals) os << ' ' << r;
    os << " (reduce epsilon, damp, or refine the grid)";
    throw PicardError(os.str(), residuals);
  }

  // One more sweep with the converged path to produce consistent outputs.
  SweepOutput sweep = transport_sweep(cfg, m_path, dx, dt, cells, steps, stride, true);

  MeanFieldSolution sol;
  sol.dx = dx;
  sol.dt = dt;
  sol.x_max = dx * static_cast<double>(cells);
  sol.horizon = cfg.horizon;
  sol.alpha = cfg.alpha;
  sol.epsilon = cfg.epsilon;
  sol.m0 = cfg.m0;
  sol.cells = cells;
  sol.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) sol.times[k] = dt * static_cast<double>(k);
  sol.activity = std::move(m_path);
  sol.boundary_flux = std::move(sweep.flux);
  sol.delay_forcing = delay_convolution(sol.boundary_flux, dt, cfg.delay);
  sol.final_density = std::move(sweep.final_row);
  sol.density_stride = stride;
  sol.density_rows = std::move(sweep.row_indices);
  sol.density = std::move(sweep.rows);
  sol.picard_residuals = std::move(residuals);
  return sol;
}

std::vector<MeanFieldSolution> picard_solve_atoms(const MeanFieldConfig& cfg,
                                                  const std::vector<double>& m0_atoms) {
  if (m0_atoms.empty()) throw ConfigError("meanfield: atom list is empty");
  std::vector<MeanFieldSolution> out;
  out.reserve(m0_atoms.size());
  for (double atom : m0_atoms) {
    MeanFieldConfig c = cfg;
    c.m0 = atom;
    out.push_back(picard_solve(c));
  }
  return out;
}

double MeanFieldSolution::activity_at(double t) const { return lerp_path(activity, dt, t); }

double MeanFieldSolution::activity_max_on(double t0, double t1) const {
  return max_on_path(activity, dt, t0, t1);
}

double MeanFieldSolution::forcing_at(double t) const { return lerp_path(delay_forcing, dt, t); }

double MeanFieldSolution::forcing_max_on(double t0, double t1) const {
  return max_on_path(delay_forcing, dt, t0, t1);
}

double MeanFieldSolution::forcing_integral(double t0, double s) const {
  if (s <= t0) return 0.0;
  // Piecewise-constant forcing per grid segment with exact exponential
  // weights; stays below g_max * (1 - e^{-alpha (s-t0)}).
  double total = 0.0;
  double u = t0;
  while (u < s) {
    std::size_t k = static_cast<std::size_t>(u / dt);
    double seg_end = std::min(dt * static_cast<double>(k + 1), s);
    if (seg_end <= u) seg_end = s;  // fp guard at segment boundaries
    double g_seg = 0.5 * (forcing_at(u) + forcing_at(seg_end));
    total += g_seg * (std::exp(-alpha * (s - seg_end)) - std::exp(-alpha * (s - u)));
    u = seg_end;
  }
  return total;
}

std::vector<double> MeanFieldSolution::sample_final_ages(std::size_t n, RngStream& rng) const {
  std::vector<double> cdf(cells + 1, 0.0);
  for (std::size_t j = 0; j < cells; ++j) cdf[j + 1] = cdf[j] + final_density[j] * dx;
  double total = cdf.back();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t j = it == cdf.begin() ? 1 : static_cast<std::size_t>(it - cdf.begin());
    if (j > cells) j = cells;
    double c0 = cdf[j - 1], c1 = cdf[j];
    double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    out[i] = dx * (static_cast<double>(j - 1) + frac);
  }
  return out;
}

std::vector<double> stationary_profile(const IntensityModel& model, double x_max, double dx) {
  if (!(x_max > 0.0) || !(dx > 0.0) || x_max < 3.0 * dx)
    throw ConfigError("stationary_profile: bad grid");
  const std::size_t cells = static_cast<std::size_t>(std::ceil(x_max / dx - 1e-9));

  // Cumulative hazard at cell centers (rates taken at zero activity).
  std::vector<double> cum(cells);
  double x_prev = 0.0, a_prev = model.eval(0.0, 0.0), acc = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    double x = dx * (static_cast<double>(j) + 0.5);
    double a = model.eval(x, 0.0);
    acc += 0.5 * (a_prev + a) * (x - x_prev);
    cum[j] = acc;
    x_prev = x;
    a_prev = a;
  }
  double x_end = dx * static_cast<double>(cells);
  double a_end = model.eval(x_end, 0.0);
  double cum_end = acc + 0.5 * (a_prev + a_end) * (x_end - x_prev);

  std::vector<double> u(cells);
  double mass = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    u[j] = std::exp(-cum[j]);
    mass += u[j] * dx;
  }
  // The rate is non-decreasing, so beyond the grid exp(-cum) is dominated by
  // a pure exponential with the end rate; that bounds the tail mass.
  double tail = a_end > 0.0 ? std::exp(-cum_end) / a_end
                            : std::numeric_limits<double>::infinity();
  if (!(tail / (mass + tail) <= 1e-6))
    throw ConfigError("stationary_profile: grid too short, tail mass above 1e-6");

  for (auto& v : u) v /= mass;
  return u;
}

}  // namespace agenet

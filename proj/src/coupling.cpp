#include "agenet/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "agenet/errors.hpp"

namespace agenet {

namespace {

double sorted_mean_abs_gap(std::span<const double> a, std::span<const double> b) {
  std::vector<double> gaps(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) gaps[i] = std::abs(a[i] - b[i]);
  std::sort(gaps.begin(), gaps.end());
  double s = 0.0;
  for (double g : gaps) s += g;
  return s / static_cast<double>(a.size());
}

}  // namespace

double coupling_distance(std::span<const double> particle_ages,
                         std::span<const double> copy_ages, double m_particle,
                         double m_meanfield) {
  if (particle_ages.size() != copy_ages.size())
    throw DomainError("coupling_distance: size mismatch");
  return sorted_mean_abs_gap(particle_ages, copy_ages) + std::abs(m_particle - m_meanfield);
}

namespace {

struct PendingArrival {
  double time;
  std::uint32_t source;
  bool operator>(const PendingArrival& o) const {
    return time != o.time ? time > o.time : source > o.source;
  }
};

}  // namespace

CoupledRun simulate_coupled(const NetworkConfig& cfg, const MeanFieldSolution& mf) {
  cfg.validate();
  if (mf.horizon + 1e-12 < cfg.horizon)
    throw ConfigError("coupled run: mean-field solution horizon is shorter than the run");
  if (mf.alpha != cfg.alpha || mf.epsilon != cfg.epsilon)
    throw ConfigError("coupled run: alpha/epsilon mismatch with the mean-field solution");
  double m0_pinned;
  if (cfg.pin_m0)
    m0_pinned = *cfg.pin_m0;
  else if (auto v = cfg.m0.dirac_value())
    m0_pinned = *v;
  else
    throw ConfigError("coupled run: initial activity must be deterministic (dirac m0 or pin_m0)");
  if (mf.m0 != m0_pinned)
    throw ConfigError("coupled run: mean-field m0 does not match the pinned initial activity");

  const std::size_t n = cfg.n_neurons;
  const double T = cfg.horizon;
  const double alpha = cfg.alpha;
  const double eps = cfg.epsilon;
  const double bump = alpha * eps / static_cast<double>(n);
  const IntensityModel& a = cfg.intensity;

  // Initial conditions: same substreams as the standalone engine, so a
  // coupled run shares its particle side's randomness layout.
  NetworkConfig pinned_cfg = cfg;
  pinned_cfg.pin_m0 = m0_pinned;
  NetworkState init = Simulator::init(pinned_cfg);

  std::vector<double> birth_x(init.initial_ages().size());
  std::vector<double> birth_y(init.initial_ages().size());
  for (std::size_t i = 0; i < n; ++i) birth_x[i] = birth_y[i] = -init.initial_ages()[i];
  const std::vector<double>& delays = init.delay_vector();

  // One proposal stream per neuron (common Poisson measure for both sides).
  SeedSequence coupled_root = SeedSequence{cfg.seed}.child(Simulator::kSaltCoupling);
  std::vector<RngStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(coupled_root.derive(i));

  std::priority_queue<PendingArrival, std::vector<PendingArrival>, std::greater<>> pending;

  double t = 0.0;
  double m_x = init.activity();  // particle activity
  double m_y = m0_pinned;        // copy-side activity, re-integrated per window

  CoupledRun out;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> envelope(n), next_prop(n), base_x(n), base_y(n);

  std::vector<double> snap_times(cfg.snapshot_grid + 1);
  for (std::size_t k = 0; k <= cfg.snapshot_grid; ++k)
    snap_times[k] = T * static_cast<double>(k) / static_cast<double>(cfg.snapshot_grid);
  std::size_t next_snap = 0;

  auto ages_at = [&](const std::vector<double>& birth, double when) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = when - birth[i];
    return v;
  };
  // Record snapshots in (prev, limit]; mid-window evaluation, no state change.
  auto emit_snapshots_until = [&](double limit, double t0, double mx0, double my0) {
    while (next_snap < snap_times.size() && snap_times[next_snap] <= limit) {
      double s = snap_times[next_snap];
      double decay = std::exp(-alpha * (s - t0));
      double mx_s = mx0 * decay;
      double my_s = my0 * decay + eps * mf.forcing_integral(t0, s);
      CouplingStats row;
      row.t = s;
      std::vector<double> ax = ages_at(birth_x, s), ay = ages_at(birth_y, s);
      row.mean_age_gap = sorted_mean_abs_gap(ax, ay);
      row.activity_gap = std::abs(mx_s - my_s);
      row.coupling_distance = row.mean_age_gap + row.activity_gap;
      out.stats.push_back(row);
      ++next_snap;
    }
  };

  std::size_t guard = 0;
  const std::size_t proposal_cap = 1000 * cfg.event_cap;

  while (t < T) {
    // Arrivals due now apply before any new proposal window opens.
    while (!pending.empty() && pending.top().time <= t) {
      pending.pop();
      m_x += bump;
    }

    double t_arrival = pending.empty() ? T : std::min(pending.top().time, T);
    double window =
        std::min({t_arrival - t, cfg.max_window, cfg.window_alpha_frac / alpha, T - t});
    double window_end = std::min(t + window, t_arrival);
    if (window_end <= t) window_end = t_arrival;  // fp guard: force progress
    const double span = window_end - t;

    // Per-neuron envelopes over the window: the particle activity only
    // decays here, the copy activity is bounded by its decayed anchor plus
    // the largest forcing on the window (the margin absorbs the quadrature
    // roundoff of the forcing integral; looseness never breaks exactness).
    double my_up = m_y + eps * mf.forcing_max_on(t, window_end) * (1.0 - std::exp(-alpha * span));
    my_up += 1e-9 * (1.0 + my_up);
    for (std::size_t i = 0; i < n; ++i) {
      base_x[i] = t - birth_x[i];
      base_y[i] = t - birth_y[i];
      double lam = std::max(a.eval(base_x[i] + span, m_x), a.eval(base_y[i] + span, my_up));
      envelope[i] = lam;
      next_prop[i] = lam > 0.0 ? t + streams[i].exponential(lam) : inf;
    }

    bool event_applied = false;
    for (;;) {
      // Earliest proposal across neurons (ties: lowest index).
      std::size_t best = 0;
      double s = inf;
      for (std::size_t i = 0; i < n; ++i)
        if (next_prop[i] < s) {
          s = next_prop[i];
          best = i;
        }
      if (s > window_end) break;
      if (++guard > proposal_cap)
        throw SimulationError("coupled run: proposal cap of " + std::to_string(proposal_cap) +
                              " exceeded");
      if (out.particle_spikes + out.copy_spikes > cfg.event_cap)
        throw SimulationError("coupled run: event cap of " + std::to_string(cfg.event_cap) +
                              " applied events exceeded (mis-specified intensity?)");

      // Left limits at s, anchored like the envelopes so the acceptance
      // ratio stays <= 1 under floating point. The copy anchor decays with
      // the same factor as the particle anchor; with eps = 0 the two values
      // are bitwise equal.
      double delta = std::min(s - t, span);
      double decay = std::exp(-alpha * delta);
      double mx_s = m_x * decay;
      double my_s = m_y * decay + eps * mf.forcing_integral(t, t + delta);
      double rate_x = a.eval(base_x[best] + delta, mx_s);
      double rate_y = a.eval(base_y[best] + delta, my_s);
      out.max_acceptance_ratio = std::max(
          out.max_acceptance_ratio, std::max(rate_x, rate_y) / envelope[best]);

      double u = streams[best].uniform();  // common acceptance uniform
      bool fire_x = u * envelope[best] <= rate_x;
      bool fire_y = u * envelope[best] <= rate_y;
      if (!fire_x && !fire_y) {
        next_prop[best] = s + streams[best].exponential(envelope[best]);
        continue;
      }

      emit_snapshots_until(s, t, m_x, m_y);
      // Advance both anchors to s and apply the resets.
      m_x = mx_s;
      m_y = my_s;
      t = s;
      if (fire_x) {
        birth_x[best] = s;
        ++out.particle_spikes;
        double tau = delays[best];
        if (tau == 0.0)
          m_x += bump;
        else if (s + tau > T)
          ++out.dropped_arrivals;
        else
          pending.push({s + tau, static_cast<std::uint32_t>(best)});
      }
      if (fire_y) {
        birth_y[best] = s;
        ++out.copy_spikes;
      }
      event_applied = true;  // envelopes must be refreshed
      break;
    }
    if (event_applied) continue;

    emit_snapshots_until(window_end, t, m_x, m_y);
    double decay = std::exp(-alpha * (window_end - t));
    m_x *= decay;
    m_y = m_y * decay + eps * mf.forcing_integral(t, window_end);
    t = window_end;
  }
  emit_snapshots_until(T, t, m_x, m_y);

  out.particle_final_ages = ages_at(birth_x, T);
  out.copy_final_ages = ages_at(birth_y, T);
  out.particle_final_activity = m_x * std::exp(-alpha * (T - t));
  out.meanfield_final_activity = m_y * std::exp(-alpha * (T - t)) + eps * mf.forcing_integral(t, T);
  return out;
}

}  // namespace agenet

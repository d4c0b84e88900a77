#include "agenet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agenet/errors.hpp"

namespace agenet {

void NetworkConfig::validate() const {
  if (n_neurons < 1) throw ConfigError("config: n_neurons must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("config: alpha must be > 0");
  if (!(epsilon >= 0.0)) throw ConfigError("config: epsilon must be >= 0");
  if (!(horizon > 0.0)) throw ConfigError("config: horizon must be > 0");
  if (snapshot_grid < 1) throw ConfigError("config: snapshot_grid must be >= 1");
  if (!(max_window > 0.0) || !(window_alpha_frac > 0.0))
    throw ConfigError("config: thinning window bounds must be > 0");
  if (pin_m0 && !(*pin_m0 >= 0.0)) throw ConfigError("config: pinned m0 must be >= 0");

  if (intensity.family() == IntensityModel::Family::Custom) {
    // Thinning is exact only for monotone rates; refuse undeclared or
    // grid-failing custom models.
    if (!intensity.declared_monotone())
      throw ModelError("config: custom intensity must be declared monotone");
    double x_hi = g0.upper_bound() + horizon;
    double m_hi = validation_m_max;
    if (m_hi <= 0.0)
      m_hi = m0.upper_bound() + (pin_m0 ? *pin_m0 : 0.0) + alpha * epsilon * (horizon + 1.0) + 1.0;
    GridSpec grid{std::max(x_hi, 1e-6), std::max(m_hi, 1e-6), validation_grid, validation_grid};
    HypothesisReport rep = check_hypotheses(intensity, grid, {});
    if (!rep.monotone_in_age || !rep.monotone_in_activity)
      throw ModelError("config: custom intensity failed the monotonicity grid check");
  }
}

std::vector<double> NetworkState::ages() const {
  std::vector<double> out(birth_.size());
  for (std::size_t i = 0; i < birth_.size(); ++i) out[i] = t_ - birth_[i];
  return out;
}

Simulator::Simulator(NetworkConfig cfg)
    : config_(std::move(cfg)),
      state_(init(config_)),
      thinning_rng_(SeedSequence{config_.seed}.derive(kSaltThinning)) {
  envelope_.resize(config_.n_neurons);
}

NetworkState Simulator::init(const NetworkConfig& cfg) {
  cfg.validate();
  SeedSequence root{cfg.seed};
  RngStream age_rng(root.derive(kSaltAges));
  RngStream act_rng(root.derive(kSaltActivity));
  RngStream delay_rng(root.derive(kSaltDelays));

  NetworkState s;
  s.initial_ages_.resize(cfg.n_neurons);
  s.birth_.resize(cfg.n_neurons);
  for (std::size_t i = 0; i < cfg.n_neurons; ++i) {
    double x0 = cfg.g0.sample(age_rng);
    if (!(x0 >= 0.0)) throw ModelError("init: age sampler produced a negative value");
    s.initial_ages_[i] = x0;
    s.birth_[i] = -x0;
  }
  double m = cfg.m0.sample(act_rng);
  if (cfg.pin_m0) m = *cfg.pin_m0;
  if (!(m >= 0.0)) throw ModelError("init: activity sampler produced a negative value");
  s.activity_ = m;
  s.delays_ = cfg.delay.sample_delays(cfg.n_neurons, delay_rng);
  s.t_ = 0.0;
  return s;
}

void Simulator::flow(double dt) {
  if (!(dt >= 0.0)) throw DomainError("flow: dt must be >= 0");
  flow_to(state_.t_ + dt);
}

void Simulator::flow_to(double target) {
  double dt = target - state_.t_;
  if (dt < 0.0) throw DomainError("flow: cannot move backwards");
  if (dt > 0.0) state_.activity_ *= std::exp(-config_.alpha * dt);
  state_.t_ = target;  // birth-time ages advance implicitly
}

std::optional<SpikeCandidate> Simulator::next_spike_candidate(double window, RngStream& rng) {
  if (!(window > 0.0)) return std::nullopt;
  const std::size_t n = config_.n_neurons;
  const double t0 = state_.t_;
  const double m_bar = state_.activity_;  // activity only decays inside the window

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    envelope_[i] = config_.intensity.eval(state_.age(i) + window, m_bar);
    total += envelope_[i];
  }
  if (!(total > 0.0)) return std::nullopt;

  double offset = 0.0;
  for (;;) {
    offset += rng.exponential(total);
    if (offset > window) return std::nullopt;
    ++proposals_;

    // Pick the proposing neuron with probability envelope_[i]/total.
    double u = rng.uniform() * total;
    std::size_t i = 0;
    double acc = envelope_[0];
    while (acc < u && i + 1 < n) acc += envelope_[++i];

    double age_s = state_.age(i) + offset;
    double m_s = m_bar * std::exp(-config_.alpha * offset);
    double rate = config_.intensity.eval(age_s, m_s);
    if (envelope_[i] > 0.0)
      max_ratio_ = std::max(max_ratio_, rate / envelope_[i]);
    double u2 = rng.uniform();
    if (u2 * envelope_[i] <= rate) return SpikeCandidate{t0 + offset, i};
    if (config_.log_rejections)
      log_.events.push_back({t0 + offset, EventKind::Rejection, static_cast<std::uint32_t>(i)});
  }
}

void Simulator::apply_spike(std::size_t neuron, double time) {
  state_.birth_[neuron] = time;
  log_.events.push_back({time, EventKind::Spike, static_cast<std::uint32_t>(neuron)});
  ++spike_count_;
  double tau = state_.delays_[neuron];
  if (tau == 0.0) {
    // Zero delay: the reset and the activity increment form one atomic event.
    state_.activity_ += config_.alpha * config_.epsilon / static_cast<double>(config_.n_neurons);
    log_.events.push_back({time, EventKind::Arrival, static_cast<std::uint32_t>(neuron)});
    ++arrival_count_;
    return;
  }
  double arrival = time + tau;
  if (arrival > config_.horizon) {
    ++dropped_;
    log_.events.push_back({time, EventKind::DroppedArrival, static_cast<std::uint32_t>(neuron)});
    return;
  }
  state_.pending_.push({arrival, static_cast<std::uint32_t>(neuron)});
}

void Simulator::apply_arrival(std::uint32_t source, double time) {
  if (state_.pending_.empty() || state_.pending_.top().time != time ||
      state_.pending_.top().source != source)
    throw std::logic_error("apply_arrival: out of queue order");
  state_.pending_.pop();
  state_.activity_ += config_.alpha * config_.epsilon / static_cast<double>(config_.n_neurons);
  log_.events.push_back({time, EventKind::Arrival, source});
  ++arrival_count_;
}

Snapshot Simulator::make_snapshot() const {
  Snapshot s;
  s.t = state_.t_;
  s.activity = state_.activity_;
  std::vector<double> ages = state_.ages();
  double sum = 0.0, sum2 = 0.0;
  for (double x : ages) {
    double a = config_.intensity.eval(x, state_.activity_);
    sum += a;
    sum2 += a * a;
  }
  double n = static_cast<double>(ages.size());
  s.mean_rate = sum / n;
  s.mean_rate_sq = sum2 / n;
  s.age_quantiles = age_quantiles(std::move(ages));
  return s;
}

SimResult Simulator::simulate(const Observer& observer) {
  const double T = config_.horizon;
  SimResult result;

  std::vector<double> snap_times(config_.snapshot_grid + 1);
  for (std::size_t k = 0; k <= config_.snapshot_grid; ++k)
    snap_times[k] = T * static_cast<double>(k) / static_cast<double>(config_.snapshot_grid);
  std::size_t next_snap = 0;

  auto record = [&] {
    Snapshot s = make_snapshot();
    result.snapshots.push_back(s);
    result.max_mean_rate_sq = std::max(result.max_mean_rate_sq, s.mean_rate_sq);
    if (observer) observer(state_, s);
  };
  auto emit_snapshots_until = [&](double t_limit) {
    while (next_snap < snap_times.size() && snap_times[next_snap] <= t_limit) {
      flow_to(snap_times[next_snap]);
      record();
      ++next_snap;
    }
  };
  auto check_cap = [&] {
    if (spike_count_ + arrival_count_ > config_.event_cap)
      throw SimulationError("simulate: event cap of " + std::to_string(config_.event_cap) +
                            " applied events exceeded (mis-specified intensity?)");
    if (proposals_ > 1000 * config_.event_cap)
      throw SimulationError("simulate: proposal cap of " +
                            std::to_string(1000 * config_.event_cap) + " exceeded");
  };

  emit_snapshots_until(0.0);  // t = 0 snapshot

  while (state_.t_ < T) {
    // Arrivals due now apply before any new spike candidate (lowest source
    // id first, by the queue ordering).
    while (!state_.pending_.empty() && state_.pending_.top().time <= state_.t_) {
      apply_arrival(state_.pending_.top().source, state_.pending_.top().time);
      if (config_.snapshot_at_events) record();
      check_cap();
    }

    double t_arrival = state_.pending_.empty() ? T : std::min(state_.pending_.top().time, T);
    double window = std::min({t_arrival - state_.t_, config_.max_window,
                              config_.window_alpha_frac / config_.alpha});
    double window_end = std::min(state_.t_ + window, t_arrival);
    if (window_end <= state_.t_) window_end = t_arrival;  // fp guard: force progress

    std::optional<SpikeCandidate> cand = next_spike_candidate(window_end - state_.t_, thinning_rng_);

    if (cand) {
      double ct = std::min(cand->time, window_end);  // ulp overshoot guard
      emit_snapshots_until(ct);
      flow_to(ct);
      apply_spike(cand->neuron, state_.t_);
      if (config_.snapshot_at_events) record();
      check_cap();
      continue;  // envelopes are refreshed after every applied event
    }

    emit_snapshots_until(window_end);
    flow_to(window_end);
  }
  emit_snapshots_until(T);

  result.log = std::move(log_);
  result.spike_count = spike_count_;
  result.arrival_count = arrival_count_;
  result.dropped_arrivals = dropped_;
  result.proposal_count = proposals_;
  result.moment_cap_exceeded = result.max_mean_rate_sq > config_.moment_cap;
  return result;
}

std::array<double, 5> age_quantiles(std::vector<double> ages) {
  std::sort(ages.begin(), ages.end());
  auto q = [&](double p) {
    double idx = p * static_cast<double>(ages.size() - 1);
    std::size_t lo = static_cast<std::size_t>(idx);
    std::size_t hi = std::min(lo + 1, ages.size() - 1);
    double frac = idx - static_cast<double>(lo);
    return ages[lo] + frac * (ages[hi] - ages[lo]);
  };
  return {ages.front(), q(0.25), q(0.5), q(0.75), ages.back()};
}

}  // namespace agenet

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "agenet/delays.hpp"
#include "agenet/intensity.hpp"
#include "agenet/laws.hpp"
#include "agenet/rng.hpp"

namespace agenet {

/// Full parameter set of one finite network. Random streams are derived from
/// the seed with fixed salts (see Simulator) so that runs are bit-reproducible.
struct NetworkConfig {
  std::size_t n_neurons = 1;
  double alpha = 1.0;    // activity decay rate
  double epsilon = 0.0;  // mean connectivity; each arrival bumps M by alpha*epsilon/N
  double horizon = 1.0;
  InitialLaw g0 = InitialLaw::dirac(0.0);  // initial ages
  InitialLaw m0 = InitialLaw::dirac(0.0);  // initial activity
  IntensityModel intensity = IntensityModel::pure_power(1.0);
  DelayModel delay = DelayModel::dirac(0.0);
  std::uint64_t seed = 0;

  /// When set, the initial activity is pinned to this value instead of being
  /// drawn from m0 (the m0 substream is still advanced identically).
  std::optional<double> pin_m0;

  std::size_t snapshot_grid = 100;    // snapshot times k*T/snapshot_grid
  bool snapshot_at_events = false;
  std::size_t event_cap = 10'000'000;  // applied spikes+arrivals per replica
  double max_window = 1.0;            // thinning window <= min(this, window_alpha_frac/alpha)
  double window_alpha_frac = 0.1;
  bool log_rejections = false;
  double moment_cap = 1e6;  // reported (not enforced) bound for <mu_N, a^2>

  // Rectangle on which custom intensities are grid-checked before a run.
  double validation_m_max = 0.0;  // 0 -> derived default
  std::size_t validation_grid = 64;

  void validate() const;  // throws ConfigError / ModelError
};

enum class EventKind : std::uint8_t { Spike, Arrival, DroppedArrival, Rejection };

struct Event {
  double time;
  EventKind kind;
  std::uint32_t id;  // spiking neuron / arrival source
};

struct EventLog {
  std::vector<Event> events;
};

/// Time marginal recorded on the snapshot grid.
struct Snapshot {
  double t = 0.0;
  double activity = 0.0;
  std::array<double, 5> age_quantiles{};  // min, q25, median, q75, max
  double mean_rate = 0.0;    // <mu_N, a>
  double mean_rate_sq = 0.0; // <mu_N, a^2>
};

/// Live state of one replica. Ages are stored as birth times (age = t - birth)
/// so that flowing costs O(1) and the a-priori bound age <= initial_age + t
/// holds exactly in floating point, spikes or not.
class NetworkState {
 public:
  double time() const { return t_; }
  double activity() const { return activity_; }
  std::size_t size() const { return birth_.size(); }
  double age(std::size_t i) const { return t_ - birth_[i]; }
  std::vector<double> ages() const;
  const std::vector<double>& initial_ages() const { return initial_ages_; }
  const std::vector<double>& delay_vector() const { return delays_; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  friend class Simulator;
  struct PendingArrival {
    double time;
    std::uint32_t source;
    bool operator>(const PendingArrival& o) const {
      return time != o.time ? time > o.time : source > o.source;
    }
  };
  using PendingQueue =
      std::priority_queue<PendingArrival, std::vector<PendingArrival>, std::greater<>>;

  double t_ = 0.0;
  double activity_ = 0.0;
  std::vector<double> birth_;
  std::vector<double> initial_ages_;
  std::vector<double> delays_;
  PendingQueue pending_;
};

struct SpikeCandidate {
  double time;
  std::size_t neuron;
};

struct SimResult {
  std::vector<Snapshot> snapshots;
  EventLog log;
  std::size_t spike_count = 0;
  std::size_t arrival_count = 0;
  std::size_t dropped_arrivals = 0;
  std::size_t proposal_count = 0;
  double max_mean_rate_sq = 0.0;
  bool moment_cap_exceeded = false;
};

/// Exact event-driven simulator: ages grow at unit speed, the activity decays
/// exponentially between arrivals, spikes are drawn by thinning against
/// monotone envelopes, a spike resets its neuron's age and schedules an
/// activity increment of alpha*epsilon/N after that neuron's delay.
class Simulator {
 public:
  explicit Simulator(NetworkConfig cfg);

  /// Draw the initial state: ages i.i.d. g0, activity from m0 (or pinned),
  /// delays i.i.d. from the delay law, each from its own substream.
  static NetworkState init(const NetworkConfig& cfg);

  /// Advance by dt through an event-free stretch: ages += dt, activity
  /// decays analytically. Negative dt is a domain error.
  void flow(double dt);

  /// Run thinning on the arrival-free window (t, t+window]. Proposes from the
  /// homogeneous envelope sum_i a(age_i + window, M) and returns the first
  /// accepted spike, or nothing if the window is exhausted. Does not mutate
  /// the state; consumes the stream.
  std::optional<SpikeCandidate> next_spike_candidate(double window, RngStream& rng);

  /// Reset neuron's age and schedule its arrival (atomic activity bump when
  /// the delay is zero; dropped with a log entry past the horizon).
  void apply_spike(std::size_t neuron, double time);

  /// Pop the queue head (must match) and bump the activity by alpha*eps/N.
  void apply_arrival(std::uint32_t source, double time);

  /// Event loop to the horizon. The observer (optional) sees the state at
  /// every snapshot time.
  using Observer = std::function<void(const NetworkState&, const Snapshot&)>;
  SimResult simulate(const Observer& observer = {});

  const NetworkState& state() const { return state_; }
  const NetworkConfig& config() const { return config_; }

  /// Largest acceptance ratio seen (diagnostic; must stay <= 1).
  double max_acceptance_ratio() const { return max_ratio_; }

  Snapshot make_snapshot() const;

  // Stream salts, fixed for reproducibility and echoed in manifests.
  static constexpr std::uint64_t kSaltAges = 1;
  static constexpr std::uint64_t kSaltActivity = 2;
  static constexpr std::uint64_t kSaltDelays = 3;
  static constexpr std::uint64_t kSaltThinning = 4;
  static constexpr std::uint64_t kSaltCoupling = 5;
  static constexpr std::uint64_t kSaltMfSample = 6;

 private:
  void flow_to(double target);

  NetworkConfig config_;
  NetworkState state_;
  RngStream thinning_rng_;
  EventLog log_;
  std::size_t spike_count_ = 0, arrival_count_ = 0, dropped_ = 0, proposals_ = 0;
  double max_ratio_ = 0.0;
  std::vector<double> envelope_;  // scratch
};

/// Quantiles (min, q25, median, q75, max) with linear interpolation.
std::array<double, 5> age_quantiles(std::vector<double> ages);

}  // namespace agenet

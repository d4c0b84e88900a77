#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agenet/engine.hpp"
#include "agenet/pde.hpp"

namespace agenet {

/// Per-snapshot statistics of one coupled replica.
struct CouplingStats {
  double t = 0.0;
  double coupling_distance = 0.0;  // mean |X - Y| + |M_particle - M_meanfield|
  double activity_gap = 0.0;       // |M_particle - M_meanfield|
  double mean_age_gap = 0.0;       // mean |X - Y|
};

/// Result of a particle run coupled with its mean-field copies through the
/// same per-neuron proposal streams.
struct CoupledRun {
  std::vector<CouplingStats> stats;    // one row per snapshot time
  std::vector<double> particle_final_ages;
  std::vector<double> copy_final_ages;
  double particle_final_activity = 0.0;
  double meanfield_final_activity = 0.0;
  std::size_t particle_spikes = 0;
  std::size_t copy_spikes = 0;
  std::size_t dropped_arrivals = 0;
  double max_acceptance_ratio = 0.0;   // must stay <= 1
};

/// The coupling functional at one time: mean absolute age gap plus the
/// activity gap. The age gaps are summed in ascending order so the value is
/// exactly invariant under neuron relabeling.
double coupling_distance(std::span<const double> particle_ages,
                         std::span<const double> copy_ages, double m_particle,
                         double m_meanfield);

/// Run the particle system and, sharing each neuron's proposal stream and
/// acceptance uniforms, the mean-field copy processes driven by the solver's
/// activity. Requires a deterministic initial activity (m0 Dirac or pinned)
/// matching the solution, and matching (alpha, epsilon, horizon) parameters.
///
/// The copy-side activity is re-integrated from the solver's delay forcing
/// along the shared event windows, anchored exactly like the particle side;
/// with epsilon = 0 the two activities follow identical arithmetic and the
/// coupling distance vanishes exactly.
CoupledRun simulate_coupled(const NetworkConfig& cfg, const MeanFieldSolution& mf);

}  // namespace agenet

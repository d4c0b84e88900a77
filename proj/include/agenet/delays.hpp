#pragma once

#include <cstddef>
#include <vector>

#include "agenet/rng.hpp"

namespace agenet {

/// Law of the per-neuron transmission delay, sampled once at t=0. Supported
/// laws are compactly supported; the exponential is truncated and
/// renormalized for that reason.
class DelayModel {
 public:
  enum class Kind { Dirac, TruncatedExponential };

  static DelayModel dirac(double tau);
  /// Density proportional to c e^{-c s} on [0, tau_max].
  static DelayModel truncated_exponential(double c, double tau_max);

  Kind kind() const { return kind_; }
  double tau() const { return tau_; }
  double rate_c() const { return c_; }

  /// Exact upper bound of the support; every sample is <= this.
  double support_bound() const;

  double sample(RngStream& rng) const;
  std::vector<double> sample_delays(std::size_t n, RngStream& rng) const;

  /// Normalized density (zero outside the support); Dirac has none.
  bool is_atom() const { return kind_ == Kind::Dirac; }
  double density(double s) const;

 private:
  Kind kind_ = Kind::Dirac;
  double tau_ = 0.0;     // Dirac location / truncation bound
  double c_ = 0.0;       // exponential rate
};

}  // namespace agenet

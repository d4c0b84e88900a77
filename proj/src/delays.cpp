#include "agenet/delays.hpp"

#include <cmath>

#include "agenet/errors.hpp"

namespace agenet {

DelayModel DelayModel::dirac(double tau) {
  if (!(tau >= 0.0)) throw ModelError("delay: Dirac location must be >= 0");
  DelayModel d;
  d.kind_ = Kind::Dirac;
  d.tau_ = tau;
  return d;
}

DelayModel DelayModel::truncated_exponential(double c, double tau_max) {
  if (!(c > 0.0)) throw ModelError("delay: exponential rate must be > 0");
  if (!(tau_max > 0.0)) throw ModelError("delay: truncation bound must be > 0");
  DelayModel d;
  d.kind_ = Kind::TruncatedExponential;
  d.c_ = c;
  d.tau_ = tau_max;
  return d;
}

double DelayModel::support_bound() const { return tau_; }

double DelayModel::sample(RngStream& rng) const {
  if (kind_ == Kind::Dirac) return tau_;
  // Inverse CDF of the renormalized truncated exponential; u < 1 keeps the
  // draw strictly inside [0, tau_max].
  double u = rng.uniform();
  double s = -std::log1p(-u * (1.0 - std::exp(-c_ * tau_))) / c_;
  return s < tau_ ? s : tau_;
}

std::vector<double> DelayModel::sample_delays(std::size_t n, RngStream& rng) const {
  std::vector<double> out(n);
  for (auto& v : out) v = sample(rng);
  return out;
}

double DelayModel::density(double s) const {
  if (kind_ == Kind::Dirac) return 0.0;
  if (s < 0.0 || s > tau_) return 0.0;
  return c_ * std::exp(-c_ * s) / (1.0 - std::exp(-c_ * tau_));
}

}  // namespace agenet
